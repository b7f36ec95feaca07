//! Smallest-prime-factor tables and small-prime lists.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Limits above this are built segment by segment.
pub const SEGMENTED_THRESHOLD: u64 = 1 << 27;
const SEGMENT_LEN: usize = 1 << 18;
/// Environment variable holding the sieve memory budget in MiB.
pub const MEMORY_ENV: &str = "TORAL_SIEVE_MEM_MB";
const DEFAULT_MEMORY_MB: u64 = 2048;

pub fn memory_budget_bytes() -> u64 {
    std::env::var(MEMORY_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .unwrap_or(DEFAULT_MEMORY_MB)
        .saturating_mul(1 << 20)
}

/// Primes `<= limit` by a plain Eratosthenes sieve.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes up to 10^6, computed once.
pub fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(1_000_000))
}

/// Smallest prime factor for every `2 <= n <= limit`.
#[derive(Debug, Clone)]
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    pub fn spf(&self, n: u64) -> Option<u64> {
        (2..=self.limit).contains(&n).then(|| u64::from(self.spf[n as usize]))
    }

    pub fn is_prime(&self, n: u64) -> bool {
        self.spf(n) == Some(n)
    }

    /// Ω(n) by repeated division by the smallest prime factor.
    pub fn omega(&self, n: u64) -> Result<u32> {
        if n == 0 || n > self.limit {
            return Err(Error::InvalidInput(format!(
                "{n} is outside the table range [1, {}]",
                self.limit
            )));
        }
        Ok(self.omega_unchecked(n))
    }

    #[inline]
    pub fn omega_unchecked(&self, mut n: u64) -> u32 {
        let mut count = 0;
        while n > 1 {
            n /= u64::from(self.spf[n as usize]);
            count += 1;
        }
        count
    }
}

/// Builds a smallest-prime-factor table. Entries are `u32`, so `limit`
/// must stay below 2^32 and within the memory budget.
pub fn build_spf(limit: u64) -> Result<SpfTable> {
    build_spf_with_budget(limit, memory_budget_bytes())
}

pub fn build_spf_with_budget(limit: u64, budget_bytes: u64) -> Result<SpfTable> {
    if limit < 2 {
        return Err(Error::InvalidInput("spf table needs limit >= 2".into()));
    }
    if limit >= u64::from(u32::MAX) {
        return Err(Error::CeilingExceeded {
            value: limit,
            ceiling: u64::from(u32::MAX) - 1,
        });
    }
    let required = (limit + 1) * 4;
    if required > budget_bytes {
        return Err(Error::MemoryBudget {
            limit,
            required_bytes: required,
            budget_bytes,
        });
    }
    let n = limit as usize;
    let mut spf = vec![0u32; n + 1];
    if limit <= SEGMENTED_THRESHOLD {
        for i in 2..=n {
            if spf[i] == 0 {
                let p = i as u32;
                spf[i] = p;
                let mut j = i.saturating_mul(i);
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = p;
                    }
                    j += i;
                }
            }
        }
    } else {
        fill_segmented(&mut spf, SEGMENT_LEN);
    }
    Ok(SpfTable { limit, spf })
}

fn fill_segmented(spf: &mut [u32], segment_len: usize) {
    let n = spf.len() - 1;
    let base = primes_up_to(crate::factor::mont::isqrt_u128(n as u128) as u64);
    let mut lo = 2usize;
    while lo <= n {
        let hi = (lo + segment_len - 1).min(n);
        for &p in &base {
            let p = p as usize;
            if p * p > hi {
                break;
            }
            let mut j = (lo.div_ceil(p) * p).max(p * p);
            while j <= hi {
                if spf[j] == 0 {
                    spf[j] = p as u32;
                }
                j += p;
            }
        }
        for (i, slot) in spf[lo..=hi].iter_mut().enumerate() {
            if *slot == 0 {
                *slot = (lo + i) as u32;
            }
        }
        lo = hi + 1;
    }
}
