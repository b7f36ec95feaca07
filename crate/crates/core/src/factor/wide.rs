//! Montgomery arithmetic on fixed-width odd moduli of N 64-bit limbs, used
//! to run rho on cofactors between 128 and 512 bits without allocation.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

pub const MAX_LIMBS: usize = 8;

#[derive(Debug, Clone)]
pub struct MontN<const N: usize> {
    n: [u64; N],
    /// −n⁻¹ mod 2^64
    ninv: u64,
    r2: [u64; N],
}

fn to_limbs<const N: usize>(v: &BigUint) -> [u64; N] {
    let mut out = [0u64; N];
    for (o, d) in out.iter_mut().zip(v.iter_u64_digits()) {
        *o = d;
    }
    out
}

fn from_limbs<const N: usize>(v: &[u64; N]) -> BigUint {
    let mut bytes = Vec::with_capacity(8 * N);
    for d in v {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    BigUint::from_bytes_le(&bytes)
}

fn geq<const N: usize>(a: &[u64; N], b: &[u64; N]) -> bool {
    for i in (0..N).rev() {
        if a[i] != b[i] {
            return a[i] > b[i];
        }
    }
    true
}

fn sub_in_place<const N: usize>(a: &mut [u64; N], b: &[u64; N]) -> bool {
    let mut borrow = false;
    for i in 0..N {
        let (d, b1) = a[i].overflowing_sub(b[i]);
        let (d, b2) = d.overflowing_sub(u64::from(borrow));
        a[i] = d;
        borrow = b1 || b2;
    }
    borrow
}

fn add_in_place<const N: usize>(a: &mut [u64; N], b: &[u64; N]) -> bool {
    let mut carry = false;
    for i in 0..N {
        let (s, c1) = a[i].overflowing_add(b[i]);
        let (s, c2) = s.overflowing_add(u64::from(carry));
        a[i] = s;
        carry = c1 || c2;
    }
    carry
}

impl<const N: usize> MontN<N> {
    /// `n` must be odd and fit in N limbs.
    pub fn new(n: &BigUint) -> Self {
        assert!(n.is_odd() && n.bits() <= 64 * N as u64);
        let limbs = to_limbs::<N>(n);
        let mut inv: u64 = 1;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(limbs[0].wrapping_mul(inv)));
        }
        let r2 = (BigUint::one() << (128 * N)) % n;
        MontN {
            n: limbs,
            ninv: inv.wrapping_neg(),
            r2: to_limbs(&r2),
        }
    }

    /// a·b·R⁻¹ mod n (CIOS).
    pub fn mul(&self, a: &[u64; N], b: &[u64; N]) -> [u64; N] {
        let mut t = [0u64; MAX_LIMBS + 2];
        for &bi in b.iter() {
            let mut c: u128 = 0;
            for j in 0..N {
                let s = u128::from(t[j]) + u128::from(a[j]) * u128::from(bi) + c;
                t[j] = s as u64;
                c = s >> 64;
            }
            let s = u128::from(t[N]) + c;
            t[N] = s as u64;
            t[N + 1] = (s >> 64) as u64;
            let m = t[0].wrapping_mul(self.ninv);
            let s = u128::from(t[0]) + u128::from(m) * u128::from(self.n[0]);
            let mut c = s >> 64;
            for j in 1..N {
                let s = u128::from(t[j]) + u128::from(m) * u128::from(self.n[j]) + c;
                t[j - 1] = s as u64;
                c = s >> 64;
            }
            let s = u128::from(t[N]) + c;
            t[N - 1] = s as u64;
            t[N] = t[N + 1] + (s >> 64) as u64;
        }
        let mut out = [0u64; N];
        out.copy_from_slice(&t[..N]);
        if t[N] != 0 || geq(&out, &self.n) {
            sub_in_place(&mut out, &self.n);
        }
        out
    }

    pub fn add(&self, a: &[u64; N], b: &[u64; N]) -> [u64; N] {
        let mut s = *a;
        let carry = add_in_place(&mut s, b);
        if carry || geq(&s, &self.n) {
            sub_in_place(&mut s, &self.n);
        }
        s
    }

    pub fn to_mont(&self, v: &BigUint) -> [u64; N] {
        self.mul(&to_limbs(v), &self.r2)
    }

    pub fn from_mont(&self, v: &[u64; N]) -> BigUint {
        let mut one = [0u64; N];
        one[0] = 1;
        from_limbs(&self.mul(v, &one))
    }
}

fn abs_diff<const N: usize>(a: &[u64; N], b: &[u64; N]) -> [u64; N] {
    let (mut hi, lo) = if geq(a, b) { (*a, b) } else { (*b, a) };
    sub_in_place(&mut hi, lo);
    hi
}

/// Brent rho with polynomial x² + c in Montgomery form on an odd `n` of at
/// most N limbs. Returns a proper divisor or `None` within `budget` steps.
pub fn brent_rho_n<const N: usize>(n: &BigUint, c: u64, budget: u64) -> Option<BigUint> {
    const BATCH: u64 = 128;
    let ctx = MontN::<N>::new(n);
    let cm = ctx.to_mont(&BigUint::from(c));
    let f = |x: &[u64; N]| ctx.add(&ctx.mul(x, x), &cm);
    // gcd of the Montgomery-form product equals gcd of the plain product
    let gcd = |v: &[u64; N]| from_limbs(v).gcd(n);
    let mut y = ctx.to_mont(&BigUint::from(2 + c));
    let mut q = ctx.to_mont(&BigUint::one());
    let mut r: u64 = 1;
    let mut spent: u64 = 0;
    let mut x;
    let mut ys;
    let mut g;
    loop {
        x = y;
        for _ in 0..r {
            y = f(&y);
        }
        spent += r;
        let mut k = 0;
        loop {
            ys = y;
            let m = BATCH.min(r - k);
            for _ in 0..m {
                y = f(&y);
                q = ctx.mul(&q, &abs_diff(&x, &y));
            }
            spent += m;
            g = gcd(&q);
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
            g = gcd(&abs_diff(&x, &ys));
            if !g.is_one() {
                break;
            }
        }
    }
    (!g.is_one() && g != *n && !g.is_zero()).then_some(g)
}

/// Dispatches to the narrowest limb count; `None` when `n` is even or
/// wider than [`MAX_LIMBS`] limbs.
pub fn brent_rho_fixed(n: &BigUint, c: u64, budget: u64) -> Option<Option<BigUint>> {
    if n.is_even() {
        return None;
    }
    let limbs = n.bits().div_ceil(64);
    Some(match limbs {
        0..=2 => brent_rho_n::<2>(n, c, budget),
        3 => brent_rho_n::<3>(n, c, budget),
        4 => brent_rho_n::<4>(n, c, budget),
        5 => brent_rho_n::<5>(n, c, budget),
        6 => brent_rho_n::<6>(n, c, budget),
        7 => brent_rho_n::<7>(n, c, budget),
        8 => brent_rho_n::<8>(n, c, budget),
        _ => return None,
    })
}
