//! Seeded Monte Carlo model: k independent uniform integers from
//! [1, ⌊C^n⌋] at every step n.
//!
//! Randomness is counter based. The draw for (trial, n, coordinate,
//! attempt) is read from a ChaCha8 stream keyed by the seed, with the trial
//! as stream id and the remaining coordinates fixing the word position, so
//! results do not depend on evaluation order or thread count.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beta::solve_beta;
use crate::error::{Error, Result};
use crate::factor::mont::{is_prime_u128, omega_u128};
use crate::factor::sieve::build_spf;
use crate::omega_stats::{count_by_omega, ratio_to_f64, single_draw_prob_from_table};

/// Draws must stay below this so Ω is always computed exactly.
pub const MAX_DRAW: u128 = (1 << 127) - 1;
const ATTEMPT_SLOTS: u128 = 256;
const WORDS_PER_ATTEMPT: u128 = 4;

/// Parses `"1.03"`, `"21/20"` or `"2"` into an exact positive rational.
pub fn parse_rational(s: &str) -> Result<Ratio<BigUint>> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("`{s}` is not a positive rational"));
    let r = if let Some((num, den)) = s.split_once('/') {
        let num: BigUint = num.trim().parse().map_err(|_| bad())?;
        let den: BigUint = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Ratio::new(num, den)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: BigUint = if int.is_empty() {
            BigUint::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = BigUint::from(10u32).pow(frac.len() as u32);
        let frac: BigUint = frac.parse().map_err(|_| bad())?;
        Ratio::new(int * &scale + frac, scale)
    } else {
        Ratio::from_integer(s.parse().map_err(|_| bad())?)
    };
    Ok(r)
}

fn format_rational(r: &Ratio<BigUint>) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub k: u32,
    /// Either one growth constant shared by all coordinates, or one per
    /// coordinate.
    pub growth: Vec<Ratio<BigUint>>,
    pub n_max: u32,
    pub seed: u64,
    pub r_list: Vec<u32>,
    pub trials: u32,
}

impl ModelConfig {
    pub fn new(k: u32, growth: &str, n_max: u32, seed: u64) -> Result<Self> {
        let cfg = ModelConfig {
            k,
            growth: vec![parse_rational(growth)?],
            n_max,
            seed,
            r_list: Vec::new(),
            trials: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_growth_per_coordinate(mut self, growth: &[&str]) -> Result<Self> {
        self.growth = growth.iter().map(|g| parse_rational(g)).collect::<Result<_>>()?;
        self.validate()?;
        Ok(self)
    }

    pub fn with_r_list(mut self, r_list: Vec<u32>) -> Self {
        self.r_list = r_list;
        self
    }

    pub fn with_trials(mut self, trials: u32) -> Self {
        self.trials = trials;
        self
    }

    pub fn growth_labels(&self) -> Vec<String> {
        self.growth.iter().map(format_rational).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidInput("n_max must be at least 1".into()));
        }
        if self.growth.len() != 1 && self.growth.len() != self.k as usize {
            return Err(Error::InvalidInput(format!(
                "expected 1 or {} growth constants, got {}",
                self.k,
                self.growth.len()
            )));
        }
        let one = Ratio::one();
        for c in &self.growth {
            if *c <= one {
                return Err(Error::InvalidInput(format!(
                    "growth constant {} must exceed 1",
                    format_rational(c)
                )));
            }
        }
        self.bounds().map(|_| ())
    }

    fn growth_for(&self, coord: usize) -> &Ratio<BigUint> {
        if self.growth.len() == 1 {
            &self.growth[0]
        } else {
            &self.growth[coord]
        }
    }

    /// `bounds[j][n] = ⌊C_j^n⌋` for `n = 0..=n_max`.
    pub fn bounds(&self) -> Result<Vec<Vec<u128>>> {
        (0..self.growth.len())
            .map(|j| {
                let c = self.growth_for(j);
                let mut num = BigUint::one();
                let mut den = BigUint::one();
                let mut out = Vec::with_capacity(self.n_max as usize + 1);
                for n in 0..=self.n_max {
                    if n > 0 {
                        num *= c.numer();
                        den *= c.denom();
                        let g = num.gcd(&den);
                        if !g.is_one() {
                            num /= &g;
                            den /= &g;
                        }
                    }
                    let v = (&num / &den).to_u128().filter(|&v| v <= MAX_DRAW).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "⌊C^{n}⌋ exceeds 2^127 − 1; lower C or n_max so draws stay exactly factorable"
                        ))
                    })?;
                    out.push(v);
                }
                Ok(out)
            })
            .collect()
    }
}

/// Counter-based source of uniform draws.
#[derive(Debug, Clone)]
pub struct DrawRng {
    key: [u8; 32],
    coords: u128,
}

impl DrawRng {
    pub fn new(seed: u64, coords: u32) -> Self {
        let mut key = [0u8; 32];
        // Spread the seed over the key through a seeded generator.
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut key);
        DrawRng {
            key,
            coords: u128::from(coords.max(1)),
        }
    }

    /// Uniform integer in `[1, bound]` for (trial, n, coordinate).
    pub fn draw(&self, trial: u64, n: u64, coord: u32, bound: u128) -> u128 {
        if bound <= 1 {
            return 1;
        }
        let span = bound - 1;
        let bits = 128 - span.leading_zeros();
        let mask = if bits == 128 { u128::MAX } else { (1u128 << bits) - 1 };
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(trial);
        let slot = u128::from(n) * self.coords + u128::from(coord);
        rng.set_word_pos(slot * ATTEMPT_SLOTS * WORDS_PER_ATTEMPT);
        for attempt in 0..ATTEMPT_SLOTS {
            if attempt > 0 && bits <= 64 {
                // Keep attempts on their own 4-word slot.
                rng.set_word_pos((slot * ATTEMPT_SLOTS + attempt) * WORDS_PER_ATTEMPT);
            }
            let raw = if bits <= 64 {
                u128::from(rng.next_u64())
            } else {
                (u128::from(rng.next_u64()) << 64) | u128::from(rng.next_u64())
            };
            let v = raw & mask;
            if v <= span {
                return v + 1;
            }
        }
        unreachable!("rejection sampling failed {ATTEMPT_SLOTS} times in a row")
    }
}

/// Draws the k coordinates at step `n` of `trial`.
pub fn draw_vector(rng: &DrawRng, config: &ModelConfig, bounds: &[Vec<u128>], trial: u64, n: u32) -> Vec<u128> {
    (0..config.k)
        .map(|j| {
            let b = if bounds.len() == 1 {
                &bounds[0]
            } else {
                &bounds[j as usize]
            };
            rng.draw(trial, u64::from(n), j, b[n as usize])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiminfRecord {
    pub trial: u32,
    pub n: u32,
    pub omega: u32,
    /// Ω / log n, for n >= 2.
    pub ratio: Option<f64>,
    pub running_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRun {
    pub k: u32,
    pub growth: Vec<String>,
    pub n_max: u32,
    pub seed: u64,
    pub beta_k: f64,
    pub records: Vec<LiminfRecord>,
}

impl ModelRun {
    pub fn final_running_min(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.running_min)
    }
}

/// One draw per n = 1..=n_max, recording Ω of the product and the running
/// minimum of Ω/log n.
pub fn run_liminf(config: &ModelConfig) -> Result<ModelRun> {
    run_liminf_trial(config, 0)
}

pub fn run_liminf_trial(config: &ModelConfig, trial: u32) -> Result<ModelRun> {
    let bounds = config.bounds()?;
    let rng = DrawRng::new(config.seed, config.k);
    let mut running: Option<f64> = None;
    let mut records = Vec::with_capacity(config.n_max as usize);
    for n in 1..=config.n_max {
        let xs = draw_vector(&rng, config, &bounds, u64::from(trial), n);
        let omega: u32 = xs.iter().map(|&x| omega_u128(x)).sum();
        let ratio = (n >= 2).then(|| f64::from(omega) / f64::from(n).ln());
        if let Some(r) = ratio {
            running = Some(running.map_or(r, |m: f64| m.min(r)));
        }
        records.push(LiminfRecord {
            trial,
            n,
            omega,
            ratio,
            running_min: running,
        });
    }
    Ok(ModelRun {
        k: config.k,
        growth: config.growth_labels(),
        n_max: config.n_max,
        seed: config.seed,
        beta_k: solve_beta(config.k)?.beta,
        records,
    })
}

const SMALL: [u128; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Whether Ω(x₁⋯x_k) <= cap, without factoring more than needed.
pub fn omega_product_at_most(xs: &[u128], cap: u32) -> bool {
    let mut lower = 0u32;
    let mut pending: Vec<u128> = Vec::new();
    for &x in xs {
        let mut v = x;
        for &p in &SMALL {
            if p * p > v {
                break;
            }
            while v % p == 0 {
                v /= p;
                lower += 1;
                if lower > cap {
                    return false;
                }
            }
        }
        if v > 1 {
            lower += 1;
            if lower > cap {
                return false;
            }
            if v >= 101 * 101 {
                pending.push(v);
            }
        }
    }
    // Each pending cofactor has no prime below 101 and is counted once so far.
    for v in pending {
        if is_prime_u128(v) {
            continue;
        }
        lower += 1;
        if lower > cap {
            return false;
        }
        lower += omega_u128(v) - 2;
        if lower > cap {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NmaxSample {
    pub trial: u32,
    /// Largest n with Ω <= R; 0 if none, `n_max + 1` when censored.
    pub value: u32,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmaxRun {
    pub r: u32,
    pub n_max: u32,
    pub samples: Vec<NmaxSample>,
}

impl NmaxRun {
    pub fn censored_count(&self) -> usize {
        self.samples.iter().filter(|s| s.censored).count()
    }

    /// Histogram of uncensored values: `hist[t]` trials with 𝔫 = t.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.n_max as usize + 2];
        for s in &self.samples {
            if !s.censored {
                h[s.value as usize] += 1;
            }
        }
        h
    }

    /// Least-squares slope of log P[𝔫 = t] against log t over `t_lo..=t_hi`,
    /// using the values of t that occurred at least once.
    pub fn tail_slope(&self, t_lo: u32, t_hi: u32) -> Option<f64> {
        let h = self.histogram();
        let trials = self.samples.len() as f64;
        let pts: Vec<(f64, f64)> = (t_lo..=t_hi.min(self.n_max))
            .filter(|&t| t >= 1 && h[t as usize] > 0)
            .map(|t| (f64::from(t).ln(), (h[t as usize] as f64 / trials).ln()))
            .collect();
        least_squares_slope(&pts)
    }
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Per trial, the largest n <= n_max with Ω(x_{1,n}⋯x_{k,n}) <= R.
pub fn run_nmax(config: &ModelConfig, r: u32) -> Result<NmaxRun> {
    if r < config.k {
        return Err(Error::InvalidInput(format!(
            "R = {r} must be at least k = {}",
            config.k
        )));
    }
    let bounds = config.bounds()?;
    let rng = DrawRng::new(config.seed, config.k);
    let samples = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let hit = (1..=config.n_max).rev().find(|&n| {
                let xs = draw_vector(&rng, config, &bounds, u64::from(trial), n);
                omega_product_at_most(&xs, r)
            });
            match hit {
                Some(n) if n == config.n_max => NmaxSample {
                    trial,
                    value: n + 1,
                    censored: true,
                },
                Some(n) => NmaxSample {
                    trial,
                    value: n,
                    censored: false,
                },
                None => NmaxSample {
                    trial,
                    value: 0,
                    censored: false,
                },
            }
        })
        .collect();
    Ok(NmaxRun {
        r,
        n_max: config.n_max,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub t: u64,
    pub k: u32,
    pub r: u32,
    pub samples: u64,
    pub hits: u64,
    pub frequency: Option<f64>,
    pub exact: f64,
    pub deviation: Option<f64>,
    /// (frequency − p)/√(p(1−p)/samples); 0 when p ∈ {0, 1} and matched.
    pub z_score: Option<f64>,
}

/// Empirical frequency of Ω(x₁⋯x_k) <= R over `samples` uniform draws from
/// [1,T]^k against the exact probability. The same draws serve every R.
pub fn empirical_grid(t: u64, k: u32, r_list: &[u32], samples: u64, seed: u64) -> Result<Vec<Comparison>> {
    if k == 0 || t == 0 {
        return Err(Error::InvalidInput("need k >= 1 and T >= 1".into()));
    }
    let table = count_by_omega(t)?;
    let spf = if t >= 2 { Some(build_spf(t)?) } else { None };
    let rng = DrawRng::new(seed, k);
    let mut sums = vec![0u64; (64 * k) as usize + 1];
    for s in 0..samples {
        let total: u32 = (0..k)
            .map(|j| {
                let x = rng.draw(s, 0, j, u128::from(t)) as u64;
                spf.as_ref().map_or(0, |tab| tab.omega_unchecked(x))
            })
            .sum();
        sums[total as usize] += 1;
    }
    Ok(r_list
        .iter()
        .map(|&r| {
            let hits: u64 = sums.iter().take(r as usize + 1).sum();
            let exact = ratio_to_f64(&single_draw_prob_from_table(&table, k, r));
            let frequency = (samples > 0).then(|| hits as f64 / samples as f64);
            let deviation = frequency.map(|f| (f - exact).abs());
            let z_score = frequency.map(|f| {
                let var = exact * (1.0 - exact) / samples as f64;
                if var > 0.0 {
                    (f - exact) / var.sqrt()
                } else if f == exact {
                    0.0
                } else {
                    f64::INFINITY
                }
            });
            Comparison {
                t,
                k,
                r,
                samples,
                hits,
                frequency,
                exact,
                deviation,
                z_score,
            }
        })
        .collect())
}

pub fn empirical_vs_exact(t: u64, k: u32, r: u32, samples: u64, seed: u64) -> Result<Comparison> {
    Ok(empirical_grid(t, k, &[r], samples, seed)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(
            parse_rational("1.03").unwrap(),
            Ratio::new(BigUint::from(103u32), BigUint::from(100u32))
        );
        assert_eq!(
            parse_rational("21/20").unwrap(),
            Ratio::new(BigUint::from(21u32), BigUint::from(20u32))
        );
        assert_eq!(parse_rational("2").unwrap(), Ratio::from_integer(BigUint::from(2u32)));
        assert!(parse_rational("1.").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("3/0").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(2, "1", 10, 0).is_err());
        assert!(ModelConfig::new(0, "2", 10, 0).is_err());
        assert!(ModelConfig::new(2, "2", 0, 0).is_err());
        assert!(ModelConfig::new(2, "2", 127, 0).is_err());
        assert!(ModelConfig::new(2, "2", 126, 0).is_ok());
        assert!(ModelConfig::new(1, "1.03", 2000, 0).is_ok());
        let b = ModelConfig::new(1, "1.03", 30, 0).unwrap().bounds().unwrap();
        assert_eq!(b[0][23], 1);
        assert_eq!(b[0][24], 2);
        let cfg = ModelConfig::new(2, "2", 10, 0).unwrap();
        assert!(cfg.clone().with_growth_per_coordinate(&["2", "3"]).is_ok());
        assert!(cfg.with_growth_per_coordinate(&["2", "3", "5"]).is_err());
    }

    #[test]
    fn draws_are_deterministic_and_bounded() {
        let rng = DrawRng::new(7, 2);
        let a: Vec<u128> = (0..100).map(|n| rng.draw(3, n, 1, 8)).collect();
        let b: Vec<u128> = (0..100).map(|n| rng.draw(3, n, 1, 8)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| (1..=8).contains(&x)));
        let c: Vec<u128> = (0..100).map(|n| rng.draw(4, n, 1, 8)).collect();
        assert_ne!(a, c);
        let big = MAX_DRAW;
        assert!((0..50).all(|n| (1..=big).contains(&rng.draw(0, n, 0, big))));
        assert_eq!(rng.draw(0, 0, 0, 1), 1);
    }

    #[test]
    fn draw_mean_within_four_sigma() {
        // C = 2, n = 10: uniform on [1, 1024]
        let cfg = ModelConfig::new(1, "2", 10, 99).unwrap();
        let bounds = cfg.bounds().unwrap();
        assert_eq!(bounds[0][10], 1024);
        let rng = DrawRng::new(cfg.seed, 1);
        let samples = 1_000_000u64;
        let sum: f64 = (0..samples)
            .map(|t| draw_vector(&rng, &cfg, &bounds, t, 10)[0] as f64)
            .sum();
        let mean = sum / samples as f64;
        let sd = ((1024.0f64 * 1024.0 - 1.0) / 12.0).sqrt() / (samples as f64).sqrt();
        assert!((mean - 512.5).abs() < 4.0 * sd, "mean {mean}");
    }

    #[test]
    fn omega_at_most_matches_exact() {
        let rng = DrawRng::new(1, 3);
        for i in 0..3000u64 {
            let xs: Vec<u128> = (0..3).map(|j| rng.draw(i, 5, j, 1 << 60)).collect();
            let exact: u32 = xs.iter().map(|&x| omega_u128(x)).sum();
            for cap in 0..8 {
                assert_eq!(omega_product_at_most(&xs, cap), exact <= cap, "{xs:?} cap {cap}");
            }
        }
        let p = 1_000_000_007u128;
        assert!(omega_product_at_most(&[p * p], 2));
        assert!(!omega_product_at_most(&[p * p, 2], 2));
    }

    #[test]
    fn liminf_run_properties() {
        let cfg = ModelConfig::new(2, "2", 60, 5).unwrap();
        let a = run_liminf(&cfg).unwrap();
        let b = run_liminf(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 60);
        assert!(a.records[0].ratio.is_none());
        let mins: Vec<f64> = a.records.iter().filter_map(|r| r.running_min).collect();
        assert!(mins.windows(2).all(|w| w[1] <= w[0]));
        assert!((a.beta_k - 0.373365).abs() < 1e-6);
    }

    #[test]
    fn nmax_censoring() {
        // Ω(x) <= log2(2^8) = 8 per coordinate, so R = 16 always holds
        let cfg = ModelConfig::new(2, "2", 8, 1).unwrap().with_trials(50);
        let run = run_nmax(&cfg, 16).unwrap();
        assert_eq!(run.censored_count(), 50);
        assert!(run.samples.iter().all(|s| s.value == 9));
        assert!(run_nmax(&cfg, 1).is_err());
        let run = run_nmax(&cfg.clone().with_trials(200), 2).unwrap();
        let finite = run.samples.iter().filter(|s| !s.censored).count();
        assert_eq!(run.censored_count() + finite, 200);
        assert!(run.samples.iter().all(|s| s.value >= 1));
    }

    #[test]
    fn comparison_examples() {
        let c = empirical_vs_exact(10, 2, 2, 100_000, 11).unwrap();
        assert!((c.exact - 0.33).abs() < 1e-15);
        assert!(c.z_score.unwrap().abs() < 4.0);
        let c = empirical_vs_exact(10, 2, 6, 1000, 11).unwrap();
        assert_eq!(c.frequency, Some(1.0));
        assert_eq!(c.z_score, Some(0.0));
        let c = empirical_vs_exact(10, 2, 2, 0, 11).unwrap();
        assert_eq!(c.frequency, None);
        assert_eq!(c.z_score, None);
    }

    #[test]
    fn grid_monotone_in_r() {
        let g = empirical_grid(100, 2, &[2, 3, 4, 5], 5000, 3).unwrap();
        assert!(g.windows(2).all(|w| w[0].hits <= w[1].hits));
    }
}
