//! Probable-prime testing for arbitrary-precision integers.
//!
//! `probable_prime` runs strong Miller–Rabin to the first twelve prime
//! bases followed by a strong Lucas test with Selfridge parameters. Below
//! 3.317·10^24 (which covers all of u64) the Miller–Rabin stage alone is a
//! proof of primality, so results there are deterministic.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::mont::{is_prime_u128, DETERMINISTIC_BOUND};

const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Bases of the default Miller–Rabin stage.
pub const PRIMARY_BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
/// A disjoint base set used for independent re-verification.
pub const SECONDARY_BASES: [u32; 10] = [41, 43, 47, 53, 59, 61, 67, 71, 73, 79];

/// True when `n` is below the bound where [`probable_prime`] is exact.
pub fn is_deterministic_range(n: &BigUint) -> bool {
    n.to_u128().is_some_and(|v| v < DETERMINISTIC_BOUND)
}

fn trial_screen(n: &BigUint) -> Option<bool> {
    if let Some(v) = n.to_u128() {
        if v < DETERMINISTIC_BOUND {
            return Some(is_prime_u128(v));
        }
    }
    for &p in &SMALL_PRIMES {
        if (n % p).is_zero() {
            return Some(false);
        }
    }
    None
}

/// Strong probable-prime test to base `a`; `n` odd and > a.
pub fn miller_rabin(n: &BigUint, a: u32) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = BigUint::from(a).modpow(&d, n);
    if x.is_one() || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
        if x.is_one() {
            return false;
        }
    }
    false
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: &BigInt, n: &BigUint) -> i32 {
    let n_int = BigInt::from_biguint(Sign::Plus, n.clone());
    let mut a = a.mod_floor(&n_int).to_biguint().expect("non-negative after mod_floor");
    let mut n = n.clone();
    let mut result = 1;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        a >>= tz;
        let n_mod_8 = (&n % 8u32).to_u32().unwrap_or(0);
        if tz % 2 == 1 && (n_mod_8 == 3 || n_mod_8 == 5) {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        if (&a % 4u32) == BigUint::from(3u32) && (&n % 4u32) == BigUint::from(3u32) {
            result = -result;
        }
        a %= &n;
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

fn half_mod(x: BigUint, n: &BigUint) -> BigUint {
    if x.is_odd() {
        (x + n) >> 1
    } else {
        x >> 1
    }
}

fn to_residue(v: i64, n: &BigUint) -> BigUint {
    let n_int = BigInt::from_biguint(Sign::Plus, n.clone());
    BigInt::from(v)
        .mod_floor(&n_int)
        .to_biguint()
        .expect("non-negative residue")
}

/// Strong Lucas probable-prime test with Selfridge's method A parameters
/// (first D in 5, −7, 9, −11, … with (D/n) = −1; P = 1, Q = (1 − D)/4).
/// `n` must be odd, > 2 and not a perfect square.
pub fn strong_lucas(n: &BigUint) -> bool {
    let mut d: i64 = 5;
    loop {
        let j = jacobi(&BigInt::from(d), n);
        if j == -1 {
            break;
        }
        if j == 0 && BigUint::from(d.unsigned_abs()) != *n {
            return false;
        }
        d = if d > 0 { -(d + 2) } else { -d + 2 };
        if d.abs() > 1_000_000 {
            // Only perfect squares never produce a −1 symbol.
            return false;
        }
    }
    let q = (1 - d) / 4;
    let d_res = to_residue(d, n);
    let q_res = to_residue(q, n);

    let n_plus_1 = n + 1u32;
    let s = n_plus_1.trailing_zeros().unwrap_or(0);
    let k = &n_plus_1 >> s;

    // U_1 = 1, V_1 = P = 1, Q^1.
    let mut u = BigUint::one();
    let mut v = BigUint::one();
    let mut qk = q_res.clone();
    let bits = k.bits();
    for i in (0..bits - 1).rev() {
        // doubling: U_2m = U_m V_m, V_2m = V_m² − 2Q^m
        u = (&u * &v) % n;
        let two_qk = (&qk << 1) % n;
        v = ((&v * &v) % n + n - two_qk) % n;
        qk = (&qk * &qk) % n;
        if k.bit(i) {
            // increment: U_{m+1} = (U + V)/2, V_{m+1} = (D·U + V)/2
            let new_u = half_mod((&u + &v) % n, n);
            let new_v = half_mod((&d_res * &u + &v) % n, n);
            u = new_u;
            v = new_v;
            qk = (&qk * &q_res) % n;
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        let two_qk = (&qk << 1) % n;
        v = ((&v * &v) % n + n - two_qk) % n;
        if v.is_zero() {
            return true;
        }
        qk = (&qk * &qk) % n;
    }
    false
}

/// Miller–Rabin to [`PRIMARY_BASES`] plus a strong Lucas test.
pub fn probable_prime(n: &BigUint) -> bool {
    if let Some(answer) = trial_screen(n) {
        return answer;
    }
    if !PRIMARY_BASES.iter().all(|&a| miller_rabin(n, a)) {
        return false;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        return false;
    }
    strong_lucas(n)
}

/// Miller–Rabin to an arbitrary base set only; used to re-verify results
/// with bases disjoint from the default run.
pub fn probable_prime_with_bases(n: &BigUint, bases: &[u32]) -> bool {
    if *n < BigUint::from(2u32) {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if *n == BigUint::from(p) {
            return true;
        }
        if (n % p).is_zero() {
            return false;
        }
    }
    bases
        .iter()
        .filter(|&&a| BigUint::from(a) < *n)
        .all(|&a| miller_rabin(n, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(s: &str) -> BigUint {
        s.parse().unwrap()
    }

    #[test]
    fn carmichael_and_mersenne() {
        assert!(!probable_prime(&BigUint::from(561u32)));
        assert!(probable_prime(&BigUint::from(2_147_483_647u32)));
        assert!(probable_prime(&((BigUint::one() << 127u32) - 1u32)));
        assert!(!probable_prime(&((BigUint::one() << 128u32) - 1u32)));
        assert!(probable_prime(&((BigUint::one() << 521u32) - 1u32)));
        assert!(!probable_prime(&((BigUint::one() << 523u32) - 1u32)));
    }

    #[test]
    fn lucas_agrees_on_small_odd_numbers() {
        for n in (5u32..5000).step_by(2) {
            let b = BigUint::from(n);
            let r = b.sqrt();
            if &r * &r == b {
                continue;
            }
            let prime = super::super::mont::is_prime_u64(u64::from(n));
            // strong Lucas never rejects a prime
            if prime {
                assert!(strong_lucas(&b), "rejected prime {n}");
            }
        }
        // 5459 and 5777 are strong Lucas pseudoprimes, so the test passes them
        assert!(strong_lucas(&BigUint::from(5459u32)));
        assert!(strong_lucas(&BigUint::from(5777u32)));
        assert!(!strong_lucas(&BigUint::from(5781u32)));
    }

    #[test]
    fn jacobi_symbols() {
        let n = BigUint::from(15u32);
        assert_eq!(jacobi(&BigInt::from(2), &n), 1);
        assert_eq!(jacobi(&BigInt::from(7), &n), -1);
        assert_eq!(jacobi(&BigInt::from(-7), &BigUint::from(11u32)), 1);
        assert_eq!(jacobi(&BigInt::from(5), &BigUint::from(5u32)), 0);
    }

    #[test]
    fn product_of_large_primes_rejected() {
        let p = big("170141183460469231731687303715884105727");
        let q = big("2305843009213693951");
        assert!(!probable_prime(&(&p * &q)));
        assert!(!probable_prime_with_bases(&(&p * &q), &SECONDARY_BASES));
        assert!(probable_prime_with_bases(&p, &SECONDARY_BASES));
    }
}
