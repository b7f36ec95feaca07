//! Exact counts of integers by number of prime factors, the Selberg
//! density ν(z), and the single-draw probability oracle.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::factor::sieve::primes_up_to;

/// Largest T accepted by [`count_by_omega`] unless overridden.
pub const DEFAULT_SIEVE_CEILING: u64 = 100_000_000;
/// Environment variable that overrides [`DEFAULT_SIEVE_CEILING`].
pub const CEILING_ENV: &str = "TORAL_SIEVE_CEILING";
/// Truncation point used by [`nr_selberg`].
pub const DEFAULT_NU_TRUNCATION: u64 = 100_000;
/// Fitted constant of the Selberg consistency band. Artifact calibration:
/// the implied constant of the asymptotic is absolute but not explicit.
pub const SELBERG_BAND_CONSTANT: f64 = 3.0;

const SEGMENT: usize = 1 << 18;

pub fn sieve_ceiling() -> u64 {
    std::env::var(CEILING_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SIEVE_CEILING)
}

/// `counts[r] = #{1 <= x <= t : Ω(x) = r}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NrTable {
    pub t: u64,
    pub counts: Vec<u64>,
}

impl NrTable {
    pub fn get(&self, r: usize) -> u64 {
        self.counts.get(r).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Largest r with a nonzero count.
    pub fn max_r(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }
}

/// Exact N_r(T) for every r, by a segmented Ω sieve.
pub fn count_by_omega(t: u64) -> Result<NrTable> {
    count_by_omega_with_ceiling(t, sieve_ceiling())
}

pub fn count_by_omega_with_ceiling(t: u64, ceiling: u64) -> Result<NrTable> {
    if t < 1 {
        return Err(Error::InvalidInput("T must be at least 1".into()));
    }
    if t > ceiling || t > u64::from(u32::MAX) {
        return Err(Error::CeilingExceeded {
            value: t,
            ceiling: ceiling.min(u64::from(u32::MAX)),
        });
    }
    let mut counts = vec![0u64; 64];
    counts[0] = 1; // x = 1
    let root = crate::factor::mont::isqrt_u128(u128::from(t)) as u64;
    let base = primes_up_to(root);
    let mut rem = vec![0u32; SEGMENT];
    let mut omega = vec![0u8; SEGMENT];
    let mut lo = 2u64;
    while lo <= t {
        let hi = (lo + SEGMENT as u64 - 1).min(t);
        let len = (hi - lo + 1) as usize;
        for (i, r) in rem[..len].iter_mut().enumerate() {
            *r = (lo + i as u64) as u32;
        }
        omega[..len].fill(0);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut pk = p;
            while pk <= hi {
                let mut j = lo.div_ceil(pk) * pk;
                while j <= hi {
                    let idx = (j - lo) as usize;
                    rem[idx] /= p as u32;
                    omega[idx] += 1;
                    j += pk;
                }
                match pk.checked_mul(p) {
                    Some(next) => pk = next,
                    None => break,
                }
            }
        }
        for i in 0..len {
            let w = omega[i] as usize + usize::from(rem[i] > 1);
            counts[w] += 1;
        }
        lo = hi + 1;
    }
    while counts.len() > 1 && *counts.last().unwrap() == 0 {
        counts.pop();
    }
    Ok(NrTable { t, counts })
}

fn loglog(t: f64) -> f64 {
    t.ln().ln()
}

/// The classical main term (T/log T)·(log log T)^{r−1}/(r−1)!.
pub fn nr_naive(t: u64, r: u32) -> Result<f64> {
    if t < 3 {
        return Err(Error::InvalidInput("nr_naive needs T >= 3".into()));
    }
    if r < 1 {
        return Err(Error::InvalidInput("nr_naive needs r >= 1".into()));
    }
    let tf = t as f64;
    let ll = loglog(tf);
    let rm1 = f64::from(r - 1);
    Ok(tf / tf.ln() * (rm1 * ll.ln() - ln_gamma(rm1 + 1.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuValue {
    pub z: f64,
    pub value: f64,
    /// Largest prime included in the product.
    pub truncation_prime: u64,
    /// Bound on `|value − ν(z)|` from the neglected primes.
    pub tail_bound: f64,
}

fn primes_cached(limit: u64) -> Vec<u64> {
    static CACHE: OnceLock<Vec<u64>> = OnceLock::new();
    let cached = CACHE.get_or_init(|| primes_up_to(4 * DEFAULT_NU_TRUNCATION));
    if cached.last().is_some_and(|&p| p >= limit) || limit <= 4 * DEFAULT_NU_TRUNCATION {
        cached.iter().copied().take_while(|&p| p <= limit).collect()
    } else {
        primes_up_to(limit)
    }
}

/// ν(z) = Γ(z+1)^{-1} Π_p (1 − z/p)^{-1} (1 − 1/p)^z, truncated at the
/// primes up to `truncation` with a first-order correction for the rest.
///
/// Each omitted log-factor is `(z² − z)/(2p²) + O(p⁻³)`; the correction
/// uses Σ_{p>P} p⁻² ≈ 1/(P log P). The reported bound takes the omitted
/// log-mass to be at most `z(z+1)·Σ_{n>P} n⁻² < z(z+1)/P`.
pub fn nu(z: f64, truncation: u64) -> Result<NuValue> {
    if !(z > 0.0 && z <= 1.5) {
        return Err(Error::InvalidInput(format!("nu needs 0 < z <= 3/2, got {z}")));
    }
    if truncation < 2 {
        return Err(Error::InvalidInput("truncation must be at least 2".into()));
    }
    let primes = primes_cached(truncation);
    let mut log_sum = 0.0;
    for &p in &primes {
        let pf = p as f64;
        log_sum += -(-z / pf).ln_1p() + z * (-1.0 / pf).ln_1p();
    }
    let pf = truncation as f64;
    log_sum += 0.5 * z * (z - 1.0) / (pf * pf.ln());
    let value = log_sum.exp() / gamma(z + 1.0);
    let tail_bound = value * ((z * (z + 1.0) / pf).exp() - 1.0);
    Ok(NuValue {
        z,
        value,
        truncation_prime: *primes.last().expect("truncation >= 2 gives a prime"),
        tail_bound,
    })
}

/// Upper end of the uniformity range, (3/2)·log log T.
pub fn selberg_r_max(t: u64) -> f64 {
    1.5 * loglog(t as f64)
}

/// Main term of the uniform Selberg–Sathe asymptotic,
/// nr_naive(T, r)·ν((r−1)/log log T).
pub fn nr_selberg(t: u64, r: u32) -> Result<f64> {
    if t < 3 {
        return Err(Error::InvalidInput("nr_selberg needs T >= 3".into()));
    }
    if r < 1 || f64::from(r) > selberg_r_max(t) {
        return Err(Error::InvalidInput(format!(
            "r = {r} is outside 1 <= r <= (3/2) log log T = {:.3}",
            selberg_r_max(t)
        )));
    }
    let naive = nr_naive(t, r)?;
    if r == 1 {
        // ν(0⁺) = 1
        return Ok(naive);
    }
    let z = f64::from(r - 1) / loglog(t as f64);
    Ok(naive * nu(z, DEFAULT_NU_TRUNCATION)?.value)
}

/// `[1 − c·r/(log log T)², 1 + c·r/(log log T)²]` with c = 3.
pub fn selberg_band(t: u64, r: u32) -> (f64, f64) {
    let ll = loglog(t as f64);
    let w = SELBERG_BAND_CONSTANT * f64::from(r) / (ll * ll);
    (1.0 - w, 1.0 + w)
}

/// Distribution of Ω(x₁⋯x_k) for uniform draws from [1,T]^k as exact
/// integer counts: `dist[s] = #{(x_j) : Σ Ω(x_j) = s}`.
pub fn omega_sum_counts(table: &NrTable, k: u32) -> Vec<BigUint> {
    let base: Vec<BigUint> = table.counts.iter().map(|&c| BigUint::from(c)).collect();
    let mut dist = vec![BigUint::one()];
    for _ in 0..k {
        let mut next = vec![BigUint::zero(); dist.len() + base.len() - 1];
        for (i, a) in dist.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        dist = next;
    }
    dist
}

/// P[Ω(x₁⋯x_k) ≤ R] for a uniform draw from [1,T]^k, exactly.
pub fn single_draw_prob_from_table(table: &NrTable, k: u32, r_max: u32) -> Ratio<BigUint> {
    let dist = omega_sum_counts(table, k);
    let favourable: BigUint = dist.iter().take(r_max as usize + 1).sum();
    Ratio::new(favourable, BigUint::from(table.t).pow(k))
}

pub fn single_draw_prob_exact(t: u64, k: u32, r_max: u32) -> Result<Ratio<BigUint>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let table = count_by_omega(t)?;
    Ok(single_draw_prob_from_table(&table, k, r_max))
}

/// Ratio as f64 (for reporting).
pub fn ratio_to_f64(r: &Ratio<BigUint>) -> f64 {
    use num_traits::ToPrimitive;
    let num = r.numer().to_f64().unwrap_or(f64::NAN);
    let den = r.denom().to_f64().unwrap_or(f64::NAN);
    if num.is_finite() && den.is_finite() {
        num / den
    } else {
        // Scale both down to avoid overflow.
        let shift = r.denom().bits().saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    }
}
