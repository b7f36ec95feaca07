//! Fibonacci, Lucas and Mersenne numbers.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// `(F_n, F_{n+1})` by fast doubling.
pub fn fibonacci_pair(n: u64) -> (BigUint, BigUint) {
    if n == 0 {
        return (BigUint::zero(), BigUint::one());
    }
    let (a, b) = fibonacci_pair(n / 2);
    // F_2k = F_k (2F_{k+1} − F_k), F_{2k+1} = F_k² + F_{k+1}²
    let c = &a * ((&b << 1u32) - &a);
    let d = &a * &a + &b * &b;
    if n.is_multiple_of(2) {
        (c, d)
    } else {
        let e = &c + &d;
        (d, e)
    }
}

pub fn fibonacci(n: u64) -> BigUint {
    fibonacci_pair(n).0
}

/// L_n = 2F_{n+1} − F_n.
pub fn lucas(n: u64) -> BigUint {
    let (f, g) = fibonacci_pair(n);
    (g << 1u32) - f
}

/// M_n = 2^n − 1.
pub fn mersenne(n: u64) -> BigUint {
    (BigUint::one() << n) - 1u32
}
