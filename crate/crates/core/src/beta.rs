//! Saturation constants β_k.
//!
//! β_k is the unique root in (0, k−1] of
//! `f_k(t) = t·(1 − ln t + ln k) − (k − 1)`, with β_1 = 0 pinned. Two
//! independent routes are provided: bisection on `f_k`, and a closed form
//! through the lower real branch of the Lambert W function.

use serde::Serialize;

use crate::error::{Error, Result};

const BRACKET_LOW: f64 = 1e-15;
const BISECTION_TOL: f64 = 1e-13;
const HALLEY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMethod {
    Bisection,
    Lambert,
    Pinned,
}

impl BetaMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BetaMethod::Bisection => "bisection",
            BetaMethod::Lambert => "lambert",
            BetaMethod::Pinned => "pinned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSolution {
    pub k: u32,
    pub beta: f64,
    /// `|f_k(beta)|`.
    pub residual: f64,
    pub method: BetaMethod,
}

/// The exponent function `f_k(t)`, defined for `0 < t < k`.
pub fn f_k(k: u32, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let kf = f64::from(k);
    if !(t > 0.0 && t < kf) {
        return Err(Error::InvalidInput(format!(
            "f_k needs 0 < t < k, got t = {t}, k = {k}"
        )));
    }
    Ok(f_k_unchecked(kf, t))
}

fn f_k_unchecked(k: f64, t: f64) -> f64 {
    t * (1.0 - t.ln() + k.ln()) - (k - 1.0)
}

/// β_k by bisection on `[1e-15, k−1]`.
pub fn solve_beta(k: u32) -> Result<BetaSolution> {
    match k {
        0 => Err(Error::InvalidInput("k must be at least 1".into())),
        1 => Ok(BetaSolution {
            k,
            beta: 0.0,
            residual: 0.0,
            method: BetaMethod::Pinned,
        }),
        _ => {
            let kf = f64::from(k);
            let (mut lo, mut hi) = (BRACKET_LOW, kf - 1.0);
            // f_k(lo) < 0 < f_k(hi); width < k so 60 halvings reach 1e-13 for k < 10^4.
            for _ in 0..200 {
                if hi - lo <= BISECTION_TOL {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if f_k_unchecked(kf, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let beta = 0.5 * (lo + hi);
            Ok(BetaSolution {
                k,
                beta,
                residual: f_k_unchecked(kf, beta).abs(),
                method: BetaMethod::Bisection,
            })
        }
    }
}

/// Lower real branch W₋₁ of the inverse of `w ↦ w·eʷ` on `(−1/e, 0)`,
/// returning values in `(−∞, −1]`.
pub fn lambert_w_lower(x: f64) -> Result<f64> {
    let branch_point = -(-1.0f64).exp();
    if !(x > branch_point && x < 0.0) {
        return Err(Error::InvalidInput(format!("W-1 is real only on (-1/e, 0), got {x}")));
    }
    let l1 = (-x).ln();
    let mut w = l1 - (-l1).ln();
    if w >= -1.0 || !w.is_finite() {
        // Near the branch point the asymptotic seed can land above -1.
        w = -1.0 - (2.0 * (1.0 + std::f64::consts::E * x)).sqrt();
    }
    for _ in 0..100 {
        let ew = w.exp();
        let fw = w * ew - x;
        let fp = ew * (w + 1.0);
        let fpp = ew * (w + 2.0);
        let step = fw / (fp - fw * fpp / (2.0 * fp));
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= HALLEY_TOL * next.abs().max(1.0);
        w = next.min(-1.0);
        if done {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence(format!(
        "Halley iteration for W-1({x}) did not settle"
    )))
}

/// β_k through `(1−k) / W₋₁((1−k)/(e·k))`.
pub fn beta_lambert(k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput(
            "the Lambert form needs k >= 2 (beta_1 = 0 is pinned)".into(),
        ));
    }
    let kf = f64::from(k);
    let w = lambert_w_lower((1.0 - kf) / (std::f64::consts::E * kf))?;
    Ok((1.0 - kf) / w)
}

/// Rows `k = 1..=kmax`, solved by bisection.
pub fn beta_table(kmax: u32) -> Result<Vec<BetaSolution>> {
    (1..=kmax).map(solve_beta).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_k_examples() {
        assert!(f_k(2, 0.373365).unwrap().abs() < 5e-6);
        assert!((f_k(2, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        // direct evaluation: 0.001·(1 − ln 0.001 + ln 2) − 1
        let direct = 0.001 * (1.0 + 1000f64.ln() + std::f64::consts::LN_2) - 1.0;
        assert!((f_k(2, 0.001).unwrap() - direct).abs() < 1e-15);
        assert!((f_k(2, 0.001).unwrap() + 0.9914).abs() < 1e-4);
    }

    #[test]
    fn f_k_domain() {
        assert!(f_k(2, 0.0).is_err());
        assert!(f_k(2, 2.0).is_err());
        assert!(f_k(2, -1.0).is_err());
        assert!(f_k(0, 0.5).is_err());
    }

    #[test]
    fn pinned_k1() {
        let s = solve_beta(1).unwrap();
        assert_eq!(s.beta, 0.0);
        assert_eq!(s.method, BetaMethod::Pinned);
        assert!(beta_lambert(1).is_err());
    }

    #[test]
    fn reported_values() {
        let cases = [
            (2, 0.373365, 5e-6),
            (3, 0.913728, 5e-6),
            (4, 1.52961, 5e-5),
            (5, 2.19252, 5e-5),
            (10, 5.8754, 5e-4),
        ];
        for (k, want, tol) in cases {
            let got = solve_beta(k).unwrap();
            assert!((got.beta - want).abs() < tol, "k={k}: {}", got.beta);
            assert!(got.residual <= 1e-12);
            assert!((beta_lambert(k).unwrap() - want).abs() < tol);
        }
    }

    #[test]
    fn lambert_value_k2() {
        let x = -1.0 / (2.0 * std::f64::consts::E);
        let w = lambert_w_lower(x).unwrap();
        assert!((w * w.exp() - x).abs() < 1e-12);
        assert!((w + 2.67834).abs() < 1e-5);
    }

    #[test]
    fn lambert_domain() {
        assert!(lambert_w_lower(0.1).is_err());
        assert!(lambert_w_lower(-0.5).is_err());
        let w = lambert_w_lower(-0.3678).unwrap();
        assert!(w <= -1.0 && (w * w.exp() + 0.3678).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_and_increase() {
        let mut prev = 0.0;
        for k in 2..=50 {
            let s = solve_beta(k).unwrap();
            assert!(s.residual <= 1e-12, "k={k}");
            assert!(s.beta > 0.0 && s.beta <= f64::from(k) - 1.0);
            assert!((s.beta - beta_lambert(k).unwrap()).abs() <= 1e-10, "k={k}");
            assert!(s.beta > prev);
            prev = s.beta;
        }
    }

    #[test]
    fn lambert_converges_for_large_k() {
        for k in [100, 1000, 5000, 10_000] {
            let b = beta_lambert(k).unwrap();
            let s = solve_beta(k).unwrap();
            assert!((b - s.beta).abs() < 1e-8 * f64::from(k), "k={k}");
        }
    }
}
