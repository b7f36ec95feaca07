//! Indices where a pair of Fibonacci/Lucas terms is simultaneously prime,
//! and the naive prediction exp(R/β_k) for the last such index.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::beta::solve_beta;
use crate::error::{Error, Result};
use crate::factor::prime::{is_deterministic_range, probable_prime_with_bases, PRIMARY_BASES, SECONDARY_BASES};
use crate::factor::probable_prime;
use crate::sequences::{fibonacci, lucas};

pub const DEFAULT_SEARCH_BOUND: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Pair {
    /// Ω(F_n F_{n+2}) = 2
    FF,
    /// Ω(L_n L_{n+2}) = 2
    LL,
    /// Ω(F_n L_n) = 2
    FL,
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FF" => Ok(Pair::FF),
            "LL" => Ok(Pair::LL),
            "FL" => Ok(Pair::FL),
            other => Err(Error::Unknown {
                kind: "pair",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pair::FF => "FF",
            Pair::LL => "LL",
            Pair::FL => "FL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Every member is below the bound where the base set is a proof.
    Deterministic,
    Probable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSearchResult {
    pub pair: Pair,
    pub r: u32,
    pub n_bound: u64,
    pub hits: Vec<u64>,
    /// exp(2/β_2)
    pub prediction: f64,
    pub certification_level: Certification,
    /// FL only: indices where exactly one of F_n, L_n is prime.
    pub single_prime: Vec<u64>,
}

fn members(pair: Pair, n: u64) -> (BigUint, BigUint) {
    match pair {
        Pair::FF => (fibonacci(n), fibonacci(n + 2)),
        Pair::LL => (lucas(n), lucas(n + 2)),
        Pair::FL => (fibonacci(n), lucas(n)),
    }
}

/// Indices 2 <= n <= n_bound with both members probable primes. Every hit
/// is re-tested with a disjoint set of Miller–Rabin bases.
pub fn search_sigma(pair: Pair, n_bound: u64) -> Result<SigmaSearchResult> {
    if n_bound < 2 {
        return Err(Error::InvalidInput("search bound must be at least 2".into()));
    }
    let rows: Vec<(u64, bool, bool, bool)> = (2..=n_bound)
        .into_par_iter()
        .map(|n| {
            let (a, b) = members(pair, n);
            let (pa, pb) = (probable_prime(&a), probable_prime(&b));
            let det = is_deterministic_range(&a) && is_deterministic_range(&b);
            (n, pa, pb, det)
        })
        .collect();
    let mut hits = Vec::new();
    let mut single_prime = Vec::new();
    let mut all_deterministic = true;
    for &(n, pa, pb, det) in &rows {
        if pa && pb {
            let (a, b) = members(pair, n);
            let again =
                probable_prime_with_bases(&a, &SECONDARY_BASES) && probable_prime_with_bases(&b, &SECONDARY_BASES);
            if !again {
                return Err(Error::Consistency(format!(
                    "{pair} index {n}: primality not confirmed by bases {SECONDARY_BASES:?} after passing {PRIMARY_BASES:?}"
                )));
            }
            hits.push(n);
            all_deterministic &= det;
        } else if pair == Pair::FL && pa != pb {
            single_prime.push(n);
        }
    }
    Ok(SigmaSearchResult {
        pair,
        r: 2,
        n_bound,
        hits,
        prediction: naive_nmax(2, 2)?,
        certification_level: if all_deterministic {
            Certification::Deterministic
        } else {
            Certification::Probable
        },
        single_prime,
    })
}

/// exp(R/β_k), the naive guess for the last index with Ω <= R.
pub fn naive_nmax(r: u32, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput(
            "k = 1 has β_1 = 0: with probability one R-almost primes recur forever, so there is no last index".into(),
        ));
    }
    Ok((f64::from(r) / solve_beta(k)?.beta).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_prediction() {
        let v = naive_nmax(2, 2).unwrap();
        assert!((211.0..=213.0).contains(&v), "{v}");
        assert_eq!(naive_nmax(0, 3).unwrap(), 1.0);
        assert!(naive_nmax(2, 1).is_err());
    }

    #[test]
    fn small_searches() {
        let r = search_sigma(Pair::LL, 20).unwrap();
        assert_eq!(r.hits, vec![2, 5, 11, 17]);
        assert_eq!(r.certification_level, Certification::Deterministic);
        let r = search_sigma(Pair::FF, 20).unwrap();
        assert_eq!(r.hits, vec![3, 5, 11]);
        let r = search_sigma(Pair::FL, 50).unwrap();
        assert_eq!(r.hits, vec![4, 5, 7, 11, 13, 17, 47]);
        assert_eq!(r.certification_level, Certification::Deterministic);
        // F_3 = 2 is prime, L_3 = 4 is not
        assert!(r.single_prime.contains(&3));
        assert!(search_sigma(Pair::FF, 1).is_err());
    }

    #[test]
    fn smallest_ll_hit_by_trial_division() {
        let (a, b) = members(Pair::LL, 2);
        assert_eq!((a, b), (BigUint::from(3u32), BigUint::from(7u32)));
    }

    #[test]
    fn pair_parsing() {
        assert_eq!("FL".parse::<Pair>().unwrap(), Pair::FL);
        assert!("XY".parse::<Pair>().is_err());
        assert_eq!(Pair::LL.to_string(), "LL");
    }
}
