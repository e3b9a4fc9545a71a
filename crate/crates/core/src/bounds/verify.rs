use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chi2_tail_bound, martingale_bound, q_upper, sphere_cap_bound};
use crate::error::{Error, Result};
use crate::estimator::{wilson_ci, CONFIDENCE};
use crate::rng::{stream, Tag};

/// Samples drawn per independently seeded chunk.
const CHUNK: u64 = 1 << 16;

/// An inequality to check by simulation, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "camelCase", deny_unknown_fields)]
pub enum BoundCheck {
    /// `Pr[|⟨U, e₁⟩| ≥ α]` for `U` uniform on the unit sphere of `R^n`.
    SphereCap { n: usize, alpha: f64 },
    /// `Pr[χ²_n ≥ (1+x)n]`.
    Chi2Tail { n: usize, x: f64 },
    /// `Pr[f₁ + … + f_L > Lτ]` for i.i.d. Bernoulli(a) variables `f_i`, whose
    /// conditional means given the past are exactly `a`.
    Martingale { l: u64, tau: f64, a: f64 },
    /// `Pr[Z > y]` for standard normal `Z`.
    QBound { y: f64 },
}

impl BoundCheck {
    pub fn analytic(&self) -> Result<f64> {
        match *self {
            BoundCheck::SphereCap { n, alpha } => sphere_cap_bound(n, alpha),
            BoundCheck::Chi2Tail { n, x } => {
                if n == 0 || !(x >= 0.0) {
                    return Err(Error::Domain(format!("chi-squared bound needs n >= 1, x >= 0 (n={n}, x={x})")));
                }
                Ok(chi2_tail_bound(n, x))
            }
            BoundCheck::Martingale { l, tau, a } => {
                if l == 0 || !(tau > 0.0 && tau <= 1.0) || !(0.0..=1.0).contains(&a) {
                    return Err(Error::Domain(format!(
                        "martingale bound needs L >= 1, 0 < tau <= 1, 0 <= a <= 1 (L={l}, tau={tau}, a={a})"
                    )));
                }
                Ok(martingale_bound(l, tau, a))
            }
            BoundCheck::QBound { y } => {
                if !(y >= 0.0) {
                    return Err(Error::Domain(format!("Q bound needs y >= 0, got {y}")));
                }
                Ok(q_upper(y))
            }
        }
    }

    /// One draw of the bounded event.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        match *self {
            BoundCheck::SphereCap { n, alpha } => {
                let first: f64 = rng.sample(StandardNormal);
                let rest: f64 = (1..n).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
                first * first >= alpha * alpha * (first * first + rest)
            }
            BoundCheck::Chi2Tail { n, x } => {
                let chi2: f64 = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
                chi2 >= (1.0 + x) * n as f64
            }
            BoundCheck::Martingale { l, tau, a } => {
                let hits = (0..l).filter(|_| rng.random::<f64>() < a).count();
                hits as f64 > l as f64 * tau
            }
            BoundCheck::QBound { y } => rng.sample::<f64, _>(StandardNormal) > y,
        }
    }
}

/// The standard check grid: Gaussian tail at four points, sphere caps on
/// `{3, 10, 20} × {0.3, 0.5, 0.7}` (every pair inside the validity range),
/// chi-squared tails on `{20, 50} × {0.5, 1}`, and the Bernoulli martingale
/// with `a = 0.3` on `L ∈ {10, 20, 30}`, `τ ∈ {0.5, 0.6, 0.7}`. Every bound
/// on the grid is above `1e-3`, so a million samples can resolve it.
pub fn standard_suite() -> Vec<BoundCheck> {
    let mut checks: Vec<BoundCheck> = [0.5, 1.0, 2.0, 3.0].map(|y| BoundCheck::QBound { y }).into();
    for n in [3, 10, 20] {
        for alpha in [0.3, 0.5, 0.7] {
            if alpha > super::sphere_cap_min_alpha(n) {
                checks.push(BoundCheck::SphereCap { n, alpha });
            }
        }
    }
    for n in [20, 50] {
        for x in [0.5, 1.0] {
            checks.push(BoundCheck::Chi2Tail { n, x });
        }
    }
    for l in [10, 20, 30] {
        for tau in [0.5, 0.6, 0.7] {
            checks.push(BoundCheck::Martingale { l, tau, a: 0.3 });
        }
    }
    checks
}

/// Outcome of an empirical check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub check: BoundCheck,
    pub samples: u64,
    pub hits: u64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub analytic: f64,
    /// The upper end of the 99% interval lies below the bound.
    pub dominated: bool,
}

/// Estimates the probability bounded by `check` from `samples` draws and
/// compares the interval with the analytic bound.
pub fn verify_bound_empirical(check: BoundCheck, samples: u64, seed: u64) -> Result<VerifyReport> {
    let analytic = check.analytic()?;
    if samples == 0 {
        return Err(Error::Config("samples must be at least 1".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, Tag::Verify, &[c]);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).filter(|_| check.sample(&mut rng)).count() as u64
        })
        .sum();
    let (ci_low, ci_high) = wilson_ci(hits, samples, CONFIDENCE);
    Ok(VerifyReport {
        check,
        samples,
        hits,
        empirical: hits as f64 / samples as f64,
        ci_low,
        ci_high,
        analytic,
        dominated: ci_high <= analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::q_function;

    #[test]
    fn q_bound_at_one() {
        let r = verify_bound_empirical(BoundCheck::QBound { y: 1.0 }, 200_000, 1).unwrap();
        assert!(r.dominated);
        assert!(r.ci_low <= q_function(1.0) && q_function(1.0) <= r.ci_high);
    }

    #[test]
    fn hat_box_anchor() {
        let r = verify_bound_empirical(BoundCheck::SphereCap { n: 3, alpha: 0.5 }, 200_000, 2).unwrap();
        assert!((r.empirical - 0.5).abs() < 0.005);
        assert!(r.dominated);
    }

    #[test]
    fn martingale_example() {
        let r = verify_bound_empirical(BoundCheck::Martingale { l: 20, tau: 0.8, a: 0.3 }, 100_000, 3).unwrap();
        assert!(r.dominated, "{r:?}");
    }

    #[test]
    fn chunking_is_deterministic() {
        let c = BoundCheck::Chi2Tail { n: 20, x: 0.5 };
        let a = verify_bound_empirical(c, 3 * CHUNK + 17, 4).unwrap();
        let b = crate::estimator::with_threads(Some(3), || verify_bound_empirical(c, 3 * CHUNK + 17, 4).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn standard_suite_is_in_range() {
        let suite = standard_suite();
        assert_eq!(suite.len(), 4 + 9 + 4 + 9);
        assert!(suite.iter().all(|c| c.analytic().unwrap() > 1e-3));
    }

    #[test]
    fn domain_errors() {
        assert!(verify_bound_empirical(BoundCheck::SphereCap { n: 10, alpha: 0.01 }, 10, 0).is_err());
        assert!(verify_bound_empirical(BoundCheck::QBound { y: -1.0 }, 10, 0).is_err());
        assert!(serde_json::from_str::<BoundCheck>(r#"{"bound":"unknown"}"#).is_err());
        let parsed: BoundCheck = serde_json::from_str(r#"{"bound":"martingale","l":10,"tau":0.5,"a":0.2}"#).unwrap();
        assert_eq!(parsed, BoundCheck::Martingale { l: 10, tau: 0.5, a: 0.2 });
    }
}
