//! Montgomery arithmetic for odd moduli below 2^127, and the word-sized
//! primality and rho kernels built on it.

use num_integer::Integer;

/// Full 128×128 → 256-bit product as `(hi, lo)`.
#[inline]
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a0, a1) = (a & MASK, a >> 64);
    let (b0, b1) = (b & MASK, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// Montgomery context with R = 2^128. Requires an odd modulus `< 2^127`.
#[derive(Debug, Clone, Copy)]
pub struct Mont {
    n: u128,
    neg_inv: u128,
    r2: u128,
    one: u128,
}

impl Mont {
    pub fn new(n: u128) -> Self {
        assert!(n & 1 == 1 && n >> 127 == 0, "modulus must be odd and < 2^127");
        let mut inv: u128 = n;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        let r1 = (u128::MAX % n + 1) % n;
        let mut r2 = r1;
        for _ in 0..128 {
            r2 <<= 1;
            if r2 >= n {
                r2 -= n;
            }
        }
        Mont {
            n,
            neg_inv: inv.wrapping_neg(),
            r2,
            one: r1,
        }
    }

    #[inline]
    fn redc(&self, hi: u128, lo: u128) -> u128 {
        let m = lo.wrapping_mul(self.neg_inv);
        let (mh, ml) = mul_wide(m, self.n);
        let (_, carry) = lo.overflowing_add(ml);
        let t = hi + mh + u128::from(carry);
        if t >= self.n {
            t - self.n
        } else {
            t
        }
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        let (hi, lo) = mul_wide(a, b);
        self.redc(hi, lo)
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        let s = a + b;
        if s >= self.n {
            s - self.n
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a + self.n - b
        }
    }

    pub fn to_mont(&self, a: u128) -> u128 {
        self.mul(a % self.n, self.r2)
    }

    pub fn from_mont(&self, a: u128) -> u128 {
        self.redc(0, a)
    }

    pub fn one(&self) -> u128 {
        self.one
    }

    pub fn pow(&self, base: u128, mut e: u128) -> u128 {
        let mut acc = self.one;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }
}

/// The first twelve primes; as Miller–Rabin bases they decide primality
/// for every n < 3.317·10^24 (Sorenson–Webster), in particular all of u64.
pub const DETERMINISTIC_BASES: [u128; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
pub const DETERMINISTIC_BOUND: u128 = 3_317_044_064_679_887_385_961_981;

/// Strong probable-prime test to base `a` for odd `n > 2`.
pub fn strong_probable_prime(ctx: &Mont, n: u128, a: u128) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let d_full = n - 1;
    let s = d_full.trailing_zeros();
    let d = d_full >> s;
    let one = ctx.one();
    let minus_one = ctx.sub(0, one);
    let mut x = ctx.pow(ctx.to_mont(a), d);
    if x == one || x == minus_one {
        return true;
    }
    for _ in 1..s {
        x = ctx.mul(x, x);
        if x == minus_one {
            return true;
        }
        if x == one {
            return false;
        }
    }
    false
}

fn small_trial(n: u128) -> Option<bool> {
    if n < 2 {
        return Some(false);
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return Some(true);
        }
        if n.is_multiple_of(p) {
            return Some(false);
        }
    }
    if n < 41 * 41 {
        return Some(true);
    }
    None
}

/// Miller–Rabin over [`DETERMINISTIC_BASES`]; exact below
/// [`DETERMINISTIC_BOUND`], a strong probable-prime test above it.
pub fn is_prime_u128(n: u128) -> bool {
    if let Some(answer) = small_trial(n) {
        return answer;
    }
    if n >> 127 != 0 {
        // Out of Montgomery range; callers route these through the big path.
        return crate::factor::prime::probable_prime(&num_bigint::BigUint::from(n));
    }
    let ctx = Mont::new(n);
    DETERMINISTIC_BASES.iter().all(|&a| strong_probable_prime(&ctx, n, a))
}

pub fn is_prime_u64(n: u64) -> bool {
    is_prime_u128(u128::from(n))
}

/// One Brent rho pass on odd composite `n < 2^127` with constant `c`,
/// spending at most `budget` iterations. Returns a proper divisor or
/// `None` when the pass fails or the budget runs out.
pub fn brent_rho(n: u128, c: u128, budget: u64) -> Option<u128> {
    const BATCH: u64 = 128;
    let ctx = Mont::new(n);
    let cm = ctx.to_mont(c);
    let f = |x: u128| ctx.add(ctx.mul(x, x), cm);
    let mut y = ctx.to_mont(2 + c);
    let mut q = ctx.one();
    let mut r: u64 = 1;
    let mut spent: u64 = 0;
    let mut x;
    let mut ys;
    let mut g: u128;
    loop {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        spent += r;
        let mut k = 0;
        loop {
            ys = y;
            let m = BATCH.min(r - k);
            for _ in 0..m {
                y = f(y);
                q = ctx.mul(q, x.abs_diff(y));
            }
            spent += m;
            g = q.gcd(&n);
            k += m;
            if k >= r || g != 1 {
                break;
            }
        }
        if g != 1 {
            break;
        }
        if spent >= budget {
            return None;
        }
        r *= 2;
    }
    if g == n {
        // Backtrack one step at a time from the last saved point.
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g != 1 {
                break;
            }
        }
    }
    (g != 1 && g != n).then_some(g)
}

/// Complete factorization of `n < 2^127` with no budget; used where Ω must
/// be exact (model draws). Returns prime factors with multiplicity, unsorted.
pub fn factor_u128_exact(mut n: u128, out: &mut Vec<u128>) {
    if n < 2 {
        return;
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if m < 53 * 53 || is_prime_u128(m) {
            out.push(m);
            continue;
        }
        let s = isqrt_u128(m);
        if s * s == m {
            stack.push(s);
            stack.push(s);
            continue;
        }
        let mut c = 1;
        let d = loop {
            if let Some(d) = rho_any(m, c) {
                break d;
            }
            c += 1;
        };
        stack.push(d);
        stack.push(m / d);
    }
}

/// Rho on any odd composite below 2^128; the top bit needs the multi-limb kernel.
fn rho_any(m: u128, c: u128) -> Option<u128> {
    if m >> 127 == 0 {
        return brent_rho(m, c, u64::MAX);
    }
    let big = num_bigint::BigUint::from(m);
    let d = super::wide::brent_rho_fixed(&big, c as u64, u64::MAX).flatten()?;
    u128::try_from(d).ok()
}

pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = ((n as f64).sqrt() as u128).min(u64::MAX as u128);
    while x * x > n {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

/// Ω of a word-sized integer, exact.
pub fn omega_u128(n: u128) -> u32 {
    let mut v = Vec::new();
    factor_u128_exact(n, &mut v);
    v.len() as u32
}
