//! Prime factorization services.
//!
//! Machine-size Ω comes from a smallest-prime-factor sieve. Large integers
//! go through trial division by the primes below 10^6, then Brent's rho
//! with an iteration budget. Cofactors that survive the budget are kept as
//! *unresolved* composites, and [`omega_protocol`] counts each one as
//! exactly two prime factors, which is a lower bound and may undercount.

pub mod mont;
pub mod prime;
mod rho;
pub mod sieve;
pub mod table;
pub mod wide;

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
pub use prime::probable_prime;
pub use rho::brent_rho_big;
pub use sieve::{build_spf, SpfTable};
pub use table::{ingest_factor_table, FactorEntry, FactorTable, FactorTables};

/// Rho iterations allowed per cofactor on the first pass; a second pass
/// gets twice this before the cofactor is declared unresolved.
pub const DEFAULT_RHO_BUDGET: u64 = 1 << 22;
/// Trial division runs over all primes up to this bound, so every
/// unresolved cofactor exceeds its square.
pub const TRIAL_BOUND: u64 = 1_000_000;

/// Ω with a flag telling whether it is exact or a protocol lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OmegaEstimate {
    pub value: u32,
    pub exact: bool,
}

impl OmegaEstimate {
    pub const ZERO: OmegaEstimate = OmegaEstimate { value: 0, exact: true };

    pub fn exact(value: u32) -> Self {
        OmegaEstimate { value, exact: true }
    }
}

impl std::ops::Add for OmegaEstimate {
    type Output = OmegaEstimate;

    fn add(self, rhs: Self) -> Self {
        OmegaEstimate {
            value: self.value + rhs.value,
            exact: self.exact && rhs.exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorResult {
    pub n: BigUint,
    /// Sorted ascending, with multiplicity.
    pub prime_factors: Vec<BigUint>,
    /// Composite cofactors no method split within budget; sorted.
    pub unresolved: Vec<BigUint>,
}

impl FactorResult {
    pub fn fully_factored(&self) -> bool {
        self.unresolved.is_empty()
    }

    /// Ω under the unresolved-composite protocol.
    pub fn omega(&self) -> OmegaEstimate {
        OmegaEstimate {
            value: (self.prime_factors.len() + 2 * self.unresolved.len()) as u32,
            exact: self.unresolved.is_empty(),
        }
    }

    pub fn product(&self) -> BigUint {
        self.prime_factors
            .iter()
            .chain(&self.unresolved)
            .fold(BigUint::one(), |acc, f| acc * f)
    }
}

/// Factorization engine with an iteration budget and a pool of primes found
/// earlier. Dividing by pooled primes first makes sequences with strong
/// divisibility (Fibonacci, Lucas, Mersenne) cheap to factor in order.
#[derive(Debug, Clone)]
pub struct Factorizer {
    budget: u64,
    pool: BTreeSet<BigUint>,
    use_pool: bool,
}

impl Default for Factorizer {
    fn default() -> Self {
        Factorizer::new(DEFAULT_RHO_BUDGET)
    }
}

impl Factorizer {
    pub fn new(budget: u64) -> Self {
        Factorizer {
            budget,
            pool: BTreeSet::new(),
            use_pool: false,
        }
    }

    /// Remember every large prime found and try it first on later inputs.
    pub fn with_prime_pool(mut self) -> Self {
        self.use_pool = true;
        self
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    pub fn factor(&mut self, n: &BigUint) -> Result<FactorResult> {
        if n.is_zero() {
            return Err(Error::InvalidInput("cannot factor 0".into()));
        }
        let mut primes = Vec::new();
        let mut unresolved = Vec::new();
        let mut rest = n.clone();

        if self.use_pool {
            for p in &self.pool {
                if rest.is_one() {
                    break;
                }
                while (&rest % p).is_zero() {
                    rest /= p;
                    primes.push(p.clone());
                }
            }
        }

        let rest = trial_divide(rest, &mut primes);

        let mut stack = Vec::new();
        if !rest.is_one() {
            stack.push(rest);
        }
        while let Some(m) = stack.pop() {
            if probable_prime(&m) {
                primes.push(m);
                continue;
            }
            let r = m.sqrt();
            if &r * &r == m {
                stack.push(r.clone());
                stack.push(r);
                continue;
            }
            match self.split(&m) {
                Some(d) => {
                    let other = &m / &d;
                    stack.push(d);
                    stack.push(other);
                }
                None => unresolved.push(m),
            }
        }

        if self.use_pool {
            let bound = BigUint::from(TRIAL_BOUND);
            for p in &primes {
                if *p > bound {
                    self.pool.insert(p.clone());
                }
            }
        }
        primes.sort();
        unresolved.sort();
        Ok(FactorResult {
            n: n.clone(),
            prime_factors: primes,
            unresolved,
        })
    }

    /// Budgeted split: a pass at `budget`, then one at `2·budget`.
    fn split(&self, m: &BigUint) -> Option<BigUint> {
        for (pass, budget) in [(0u64, self.budget), (1, self.budget.saturating_mul(2))] {
            let c = 1 + pass;
            let d = match m.to_u128() {
                Some(v) if v >> 127 == 0 => mont::brent_rho(v, u128::from(c), budget).map(BigUint::from),
                _ => brent_rho_big(m, c, budget),
            };
            if d.is_some() {
                return d;
            }
        }
        None
    }

    /// Ω of `n` under the unresolved-composite protocol, seeded with the
    /// known factors of a table entry when one is supplied.
    pub fn omega_protocol(&mut self, n: &BigUint, entry: Option<EntryRef<'_>>) -> Result<OmegaEstimate> {
        if n.is_zero() {
            return Err(Error::InvalidInput("Ω(0) is undefined".into()));
        }
        let Some(entry) = entry else {
            return Ok(self.factor(n)?.omega());
        };
        let mut rest = n.clone();
        let mut total = OmegaEstimate::ZERO;
        for f in &entry.entry.factors {
            if f.is_zero() || !(&rest % f).is_zero() {
                return Err(Error::Integrity {
                    label: entry.label.to_string(),
                    index: entry.index,
                    message: format!("listed factor {f} does not divide the value"),
                });
            }
            rest /= f;
            total = total + self.factor(f)?.omega();
        }
        if !rest.is_one() && !entry.entry.composite_digits.is_empty() {
            // Declared composites are taken at face value: two primes each.
            let n = entry.entry.composite_digits.len() as u32;
            total = total
                + OmegaEstimate {
                    value: 2 * n,
                    exact: false,
                };
        } else if !rest.is_one() {
            total = total + self.factor(&rest)?.omega();
        } else if !entry.entry.composite_digits.is_empty() {
            return Err(Error::Integrity {
                label: entry.label.to_string(),
                index: entry.index,
                message: "listed factors exhaust the value but composites are declared".into(),
            });
        }
        Ok(total)
    }
}

/// A table entry together with the sequence label and index it describes.
#[derive(Debug, Clone, Copy)]
pub struct EntryRef<'a> {
    pub label: &'a str,
    pub index: u64,
    pub entry: &'a FactorEntry,
}

/// Divides out every prime below [`TRIAL_BOUND`], stopping early once the
/// remaining cofactor is provably prime.
fn trial_divide(mut n: BigUint, primes: &mut Vec<BigUint>) -> BigUint {
    for &p in sieve::small_primes() {
        if let Some(small) = n.to_u128() {
            let mut v = small;
            let p128 = u128::from(p);
            if p128 * p128 > v {
                break;
            }
            while v % p128 == 0 {
                v /= p128;
                primes.push(BigUint::from(p));
            }
            n = BigUint::from(v);
            continue;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > n {
            break;
        }
        while (&n % p).is_zero() {
            n /= p;
            primes.push(pb.clone());
        }
    }
    if n > BigUint::one() {
        let p = n.to_u128().unwrap_or(u128::MAX);
        let bound = u128::from(TRIAL_BOUND);
        if p < bound * bound {
            primes.push(n);
            return BigUint::one();
        }
    }
    n
}

/// Factors `n` with trial division and budgeted rho.
pub fn factor_big(n: &BigUint, budget: u64) -> Result<FactorResult> {
    Factorizer::new(budget).factor(n)
}

/// Ω(n) with unresolved composites counted as two primes each.
pub fn omega_protocol(n: &BigUint, budget: u64, entry: Option<EntryRef<'_>>) -> Result<OmegaEstimate> {
    Factorizer::new(budget).omega_protocol(n, entry)
}

/// Ω of a machine word, always exact.
pub fn omega_u64(n: u64) -> u32 {
    mont::omega_u128(u128::from(n))
}
