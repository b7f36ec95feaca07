//! Brent's variant of Pollard rho on arbitrary-precision integers.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;

const BATCH: u64 = 128;

/// One rho pass with polynomial `x² + c`, capped at `budget` iterations.
/// Returns a proper divisor of odd composite `n`, or `None`.
pub fn brent_rho_big(n: &BigUint, c: u64, budget: u64) -> Option<BigUint> {
    if let Some(found) = super::wide::brent_rho_fixed(n, c, budget) {
        return found;
    }
    brent_rho_plain(n, c, budget)
}

/// Rho on `BigUint` values directly, for moduli of any width.
pub fn brent_rho_plain(n: &BigUint, c: u64, budget: u64) -> Option<BigUint> {
    let c = BigUint::from(c);
    let f = |x: &BigUint| (x * x + &c) % n;
    let absdiff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    let mut y = BigUint::from(2u32) + &c;
    let mut q = BigUint::one();
    let mut r: u64 = 1;
    let mut spent: u64 = 0;
    let mut x;
    let mut ys;
    let mut g;
    loop {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        spent += r;
        let mut k = 0;
        loop {
            ys = y.clone();
            let m = BATCH.min(r - k);
            for _ in 0..m {
                y = f(&y);
                q = (q * absdiff(&x, &y)) % n;
            }
            spent += m;
            g = q.gcd(n);
            k += m;
            if k >= r || !g.is_one() {
                break;
            }
        }
        if !g.is_one() {
            break;
        }
        if spent >= budget {
            return None;
        }
        r *= 2;
    }
    if g == *n {
        loop {
            ys = f(&ys);
            g = absdiff(&x, &ys).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    (!g.is_one() && g != *n).then_some(g)
}
