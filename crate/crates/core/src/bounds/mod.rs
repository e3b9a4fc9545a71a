//! Closed-form capacity expressions, the concentration inequalities behind
//! the achievability argument, parameter feasibility, and the
//! doubly-exponential codebook existence bound.
//!
//! Everything that can overflow is evaluated in log space; probabilities are
//! clamped to `[0, 1]` unless documented otherwise.

mod verify;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format::significant;
use crate::model::ChannelParams;

pub use verify::{standard_suite, verify_bound_empirical, BoundCheck, VerifyReport};

/// Digits of every number in a [`BoundReport`] document.
pub const REPORT_DIGITS: usize = 12;

fn check_powers(p: f64, lambda: f64, sigma2: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Domain(format!("P must be positive, got {p}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Domain(format!("Lambda must be non-negative, got {lambda}")));
    }
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::Domain(format!("sigma2 must be non-negative, got {sigma2}")));
    }
    if lambda + sigma2 == 0.0 {
        return Err(Error::Domain(
            "Lambda + sigma2 = 0; use the noiseless capacity instead".into(),
        ));
    }
    Ok(())
}

/// Capacity in nats per channel use: `½ ln(1 + P/(Λ+σ²))` when `P > Λ`,
/// zero otherwise.
///
/// ```
/// use avclab::bounds::capacity;
/// assert!((capacity(3.0, 1.0, 1.0).unwrap() - 0.5 * 2.5f64.ln()).abs() < 1e-15);
/// assert_eq!(capacity(1.0, 2.0, 0.5).unwrap(), 0.0);
/// assert_eq!(capacity(1.0, 1.0, 0.5).unwrap(), 0.0);
/// ```
pub fn capacity(p: f64, lambda: f64, sigma2: f64) -> Result<f64> {
    check_powers(p, lambda, sigma2)?;
    Ok(if p > lambda {
        0.5 * (p / (lambda + sigma2)).ln_1p()
    } else {
        0.0
    })
}

/// Capacity without background noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum NoiselessCapacity {
    Finite(f64),
    /// `Λ = 0`: a noiseless, unjammed channel with continuous inputs.
    Unbounded,
}

/// `½ ln(1 + P/Λ)` when `P > Λ`, zero otherwise.
pub fn capacity_noiseless(p: f64, lambda: f64) -> Result<NoiselessCapacity> {
    if lambda == 0.0 && p.is_finite() && p > 0.0 {
        return Ok(NoiselessCapacity::Unbounded);
    }
    check_powers(p, lambda, 0.0)?;
    Ok(NoiselessCapacity::Finite(if p > lambda {
        0.5 * (p / lambda).ln_1p()
    } else {
        0.0
    }))
}

/// Capacity with common randomness between encoder and decoder:
/// `½ ln(1 + P/(Λ+σ²))` in both power regimes.
pub fn randomized_code_upper(p: f64, lambda: f64, sigma2: f64) -> Result<f64> {
    check_powers(p, lambda, sigma2)?;
    Ok(0.5 * (p / (lambda + sigma2)).ln_1p())
}

/// `½ e^{-y²/2}`, an upper bound on the Gaussian tail `Q(y)` for `y ≥ 0`.
pub fn q_upper(y: f64) -> f64 {
    0.5 * (-0.5 * y * y).exp()
}

/// `ξ(x) = ½(1 + x − √(1+2x))`, evaluated as `½x²/(1 + x + √(1+2x))` to
/// avoid cancellation near zero.
pub fn xi(x: f64) -> f64 {
    if x.is_infinite() {
        return x;
    }
    0.5 * x * x / (1.0 + x + (1.0 + 2.0 * x).sqrt())
}

/// `e^{-nξ(x)}`, bounding `Pr[χ²_n ≥ (1+x)n]`.
pub fn chi2_tail_bound(n: usize, x: f64) -> f64 {
    (-(n as f64) * xi(x)).exp()
}

/// Lower end of the validity range of the sphere-cap bound.
pub fn sphere_cap_min_alpha(n: usize) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * n as f64).sqrt()
}

/// `2(1−α²)^{(n−1)/2}`, bounding `Pr[|⟨U, u⟩| ≥ α]` for `U` uniform on the
/// unit sphere of `R^n` and a fixed unit vector `u`.
pub fn sphere_cap_bound(n: usize, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere-cap bound needs n >= 2, got {n}")));
    }
    let lo = sphere_cap_min_alpha(n);
    if !(alpha > lo && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha={alpha} outside the validity range 1/sqrt(2*pi*n) < alpha < 1 (here {lo:.6} < alpha < 1)"
        )));
    }
    Ok(2.0 * ((n as f64 - 1.0) / 2.0 * (-alpha * alpha).ln_1p()).exp())
}

/// `min(1, exp(−L(τ ln2 − a)))`.
pub fn martingale_bound(l: u64, tau: f64, a: f64) -> f64 {
    (-(l as f64) * (tau * LN_2 - a)).exp().min(1.0)
}

/// `ln` of [`doubly_exp_bound`]: `min(0, −(K ln2 − 10) e^{n(δ₀−δ₁)})`.
pub fn doubly_exp_bound_ln(k: f64, n: usize, delta0: f64, delta1: f64) -> f64 {
    let rate = k * LN_2 - 10.0;
    if rate <= 0.0 {
        return 0.0;
    }
    -rate * (n as f64 * (delta0 - delta1)).exp()
}

/// `min(1, exp(−(K ln2 − 10) e^{n(δ₀−δ₁)}))`.
pub fn doubly_exp_bound(k: f64, n: usize, delta0: f64, delta1: f64) -> f64 {
    doubly_exp_bound_ln(k, n, delta0, delta1).exp()
}

/// The analytic net size `(2√(nΛ)/ε)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetCardinality {
    pub ln: f64,
    /// `None` when the value overflows `f64`.
    pub value: Option<f64>,
}

pub fn net_cardinality_bound(n: usize, lambda: f64, epsilon: f64) -> Result<NetCardinality> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let nf = n as f64;
    let ln = nf * (2.0 * (nf * lambda).sqrt() / epsilon).ln();
    let value = ln.exp();
    Ok(NetCardinality {
        ln,
        value: value.is_finite().then_some(value),
    })
}

/// The union bound over net points and messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionBound {
    /// `ln(|net| · e^{nR} · doubly-exponential bound)`.
    pub failure_ln: f64,
    /// `1 − exp(failure_ln)`; negative when the bound is uninformative.
    pub success_lower: f64,
}

/// `1 − (2√(nΛ)/ε)^n · e^{nR} · exp(−(K ln2 − 10) e^{n(δ₀−δ₁)})`.
///
/// ```
/// use avclab::bounds::union_success_lower;
/// let u = union_success_lower(100, 0.4, 1.0, 0.1, 20.0, 0.1, 0.05).unwrap();
/// assert!(u.success_lower > 0.96 && u.success_lower < 0.97);
/// ```
pub fn union_success_lower(
    n: usize,
    rate: f64,
    lambda: f64,
    epsilon: f64,
    k: f64,
    delta0: f64,
    delta1: f64,
) -> Result<UnionBound> {
    if delta0 <= delta1 {
        return Err(Error::Constraint(format!("delta0>delta1 (delta0={delta0}, delta1={delta1})")));
    }
    let net = net_cardinality_bound(n, lambda, epsilon)?;
    let failure_ln = net.ln + n as f64 * rate + doubly_exp_bound_ln(k, n, delta0, delta1);
    Ok(UnionBound {
        failure_ln,
        success_lower: -failure_ln.exp_m1(),
    })
}

/// The slack parameters of the achievability argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaParams {
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub eta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub epsilon: f64,
}

/// `δ₂′ = 2√P δ₂ − δ₂²`.
pub fn delta2_prime(p: f64, delta2: f64) -> f64 {
    2.0 * p.sqrt() * delta2 - delta2 * delta2
}

/// Largest rate certified by the achievability argument for these slacks:
/// `(1−1/n)/2 · ln(1 + (P−δ₂′)/(Λ+σ²−δ₂+δ₂′)) − δ₀ − δ₁`.
///
/// ```
/// use avclab::bounds::{achievable_rate_condition, DeltaParams};
/// use avclab::model::ChannelParams;
/// let params = ChannelParams::new(100, 4.0, 1.0, 1.0).unwrap();
/// let dp = DeltaParams { delta0: 0.05, delta1: 0.02, delta2: 0.1, eta: 0.02, k: 20.0, epsilon: 0.1 };
/// let r = achievable_rate_condition(&params, &dp).unwrap();
/// assert!((r - 0.39847).abs() < 1e-5);
/// ```
pub fn achievable_rate_condition(params: &ChannelParams, dp: &DeltaParams) -> Result<f64> {
    let ChannelParams {
        n,
        power: p,
        jammer_power: lambda,
        sigma2,
    } = *params;
    if !(dp.delta2 < 2.0 * p.sqrt()) {
        return Err(Error::Constraint(format!(
            "delta2<2·sqrt(P) (delta2={}, 2·sqrt(P)={})",
            dp.delta2,
            2.0 * p.sqrt()
        )));
    }
    let d2p = delta2_prime(p, dp.delta2);
    let denom = lambda + sigma2 - dp.delta2 + d2p;
    if !(denom > 0.0) {
        return Err(Error::Constraint(format!(
            "Lambda+sigma2-delta2+delta2'>0 (value {denom})"
        )));
    }
    let factor = (1.0 - 1.0 / n as f64) / 2.0;
    Ok(factor * ((p - d2p) / denom).ln_1p() - dp.delta0 - dp.delta1)
}

/// A named constraint that does not hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub name: &'static str,
    pub detail: String,
}

fn require(out: &mut Vec<Violation>, holds: bool, name: &'static str, detail: String) {
    if !holds {
        out.push(Violation { name, detail });
    }
}

/// Every constraint of the achievability argument that `dp` violates.
///
/// The assumption `δ₂ ≤ ‖s‖²/n + σ²` is checked in its worst case over
/// jammer states, `δ₂ ≤ σ²`; see [`full_power_assumption_holds`] for the
/// form at `‖s‖² = nΛ`.
pub fn feasibility_check(params: &ChannelParams, dp: &DeltaParams) -> Vec<Violation> {
    let ChannelParams {
        n,
        power: p,
        jammer_power: lambda,
        sigma2,
    } = *params;
    let mut v = Vec::new();
    for (name, value) in [
        ("delta0>0", dp.delta0),
        ("delta1>0", dp.delta1),
        ("delta2>0", dp.delta2),
        ("eta>0", dp.eta),
        ("K>0", dp.k),
        ("epsilon>0", dp.epsilon),
    ] {
        require(&mut v, value > 0.0, name, format!("value {value}"));
    }
    require(
        &mut v,
        dp.delta0 > dp.delta1,
        "delta0>delta1",
        format!("delta0={}, delta1={}", dp.delta0, dp.delta1),
    );
    require(
        &mut v,
        dp.k * LN_2 > 10.0,
        "K·ln2>10",
        format!("K·ln2={}", dp.k * LN_2),
    );
    let eta_min = (2.0 * lambda * sigma2 * dp.delta1).sqrt();
    require(
        &mut v,
        dp.eta > eta_min,
        "eta>sqrt(2·Lambda·sigma2·delta1)",
        format!("eta={}, bound={eta_min}", dp.eta),
    );
    let d2_min_a = 2.0 * dp.eta + 4.0 * sigma2 * dp.delta1.sqrt();
    require(
        &mut v,
        dp.delta2 > d2_min_a,
        "delta2>2·eta+4·sigma2·sqrt(delta1)",
        format!("delta2={}, bound={d2_min_a}", dp.delta2),
    );
    let d2_min_b = (4.0 * p * (lambda + sigma2) * dp.delta1 / (1.0 - 1.0 / n as f64)).sqrt();
    require(
        &mut v,
        dp.delta2 > d2_min_b,
        "delta2>sqrt(4P(Lambda+sigma2)delta1/(1-1/n))",
        format!("delta2={}, bound={d2_min_b}", dp.delta2),
    );
    require(
        &mut v,
        dp.delta2 < 2.0 * p.sqrt(),
        "delta2<2·sqrt(P)",
        format!("delta2={}, bound={}", dp.delta2, 2.0 * p.sqrt()),
    );
    require(
        &mut v,
        dp.delta2 <= sigma2,
        "delta2<=sigma2",
        format!("delta2={}, sigma2={sigma2}", dp.delta2),
    );
    v
}

/// The assumption on `δ₂` evaluated at a full-power jammer: `δ₂ ≤ Λ + σ²`.
pub fn full_power_assumption_holds(params: &ChannelParams, dp: &DeltaParams) -> bool {
    dp.delta2 <= params.jammer_power + params.sigma2
}

/// Every analytic quantity for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rate: f64,
    /// `None` when `Λ + σ² = 0`.
    pub capacity_nats: Option<f64>,
    /// Largest certified rate, or the failed precondition.
    pub rate_condition: std::result::Result<f64, String>,
    pub delta2_prime: f64,
    /// `ξ((δ₂ − 2η)/σ²)`; `None` when `δ₂ < 2η`.
    pub xi: Option<f64>,
    pub net_cardinality: NetCardinality,
    pub doubly_exp_ln: f64,
    /// `None` when `δ₀ ≤ δ₁`.
    pub union: Option<UnionBound>,
    pub feasibility_violations: Vec<Violation>,
    pub full_power_assumption: bool,
}

impl BoundReport {
    pub fn new(params: &ChannelParams, rate: f64, dp: &DeltaParams) -> Result<Self> {
        params.validate()?;
        let capacity_nats = if params.jammer_power + params.sigma2 > 0.0 {
            Some(capacity(params.power, params.jammer_power, params.sigma2)?)
        } else {
            None
        };
        let x = (dp.delta2 - 2.0 * dp.eta) / params.sigma2;
        Ok(Self {
            rate,
            capacity_nats,
            rate_condition: achievable_rate_condition(params, dp).map_err(|e| e.to_string()),
            delta2_prime: delta2_prime(params.power, dp.delta2),
            xi: (x >= 0.0).then(|| xi(x)),
            net_cardinality: net_cardinality_bound(params.n, params.jammer_power, dp.epsilon)?,
            doubly_exp_ln: doubly_exp_bound_ln(dp.k, params.n, dp.delta0, dp.delta1),
            union: union_success_lower(
                params.n,
                rate,
                params.jammer_power,
                dp.epsilon,
                dp.k,
                dp.delta0,
                dp.delta1,
            )
            .ok(),
            feasibility_violations: feasibility_check(params, dp),
            full_power_assumption: full_power_assumption_holds(params, dp),
        })
    }

    pub fn feasible(&self) -> bool {
        self.feasibility_violations.is_empty()
    }

    /// The JSON document: numbers as decimal strings with 12 significant
    /// digits, log-space values under keys ending in `_ln`.
    pub fn to_json(&self) -> Value {
        let num = |x: f64| Value::String(significant(x, REPORT_DIGITS));
        let opt = |x: Option<f64>| x.map_or(Value::Null, num);
        json!({
            "rate": num(self.rate),
            "capacityNats": opt(self.capacity_nats),
            "rateCondition": self.rate_condition.as_ref().map_or(Value::Null, |&r| num(r)),
            "rateConditionError": self.rate_condition.as_ref().err(),
            "rateCertified": self.rate_condition.as_ref().is_ok_and(|&r| self.rate < r),
            "delta2Prime": num(self.delta2_prime),
            "xi": opt(self.xi),
            "netCardinalityBound": opt(self.net_cardinality.value),
            "netCardinalityBound_ln": num(self.net_cardinality.ln),
            "doublyExpBound": num(self.doubly_exp_ln.exp()),
            "doublyExpBound_ln": num(self.doubly_exp_ln),
            "unionSuccessLowerBound": opt(self.union.map(|u| u.success_lower)),
            "unionFailureBound_ln": opt(self.union.map(|u| u.failure_ln)),
            "feasibilityViolations": self.feasibility_violations,
            "fullPowerAssumptionHolds": self.full_power_assumption,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::q_function;

    fn feasible_deltas() -> DeltaParams {
        DeltaParams {
            delta0: 0.05,
            delta1: 1e-4,
            delta2: 0.1,
            eta: 0.02,
            k: 20.0,
            epsilon: 0.1,
        }
    }

    #[test]
    fn capacity_examples() {
        assert!((capacity(3.0, 1.0, 1.0).unwrap() - 0.458_145_365_937_077).abs() < 1e-15);
        assert_eq!(capacity(1.0, 2.0, 0.3).unwrap(), 0.0);
        assert_eq!(capacity(2.0, 2.0, 0.3).unwrap(), 0.0);
        assert!(matches!(capacity(1.0, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(capacity(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn noiseless_capacity() {
        assert_eq!(capacity_noiseless(3.0, 1.0).unwrap(), NoiselessCapacity::Finite(2f64.ln()));
        assert_eq!(capacity_noiseless(1.0, 1.0).unwrap(), NoiselessCapacity::Finite(0.0));
        assert_eq!(capacity_noiseless(1.0, 0.0).unwrap(), NoiselessCapacity::Unbounded);
        let NoiselessCapacity::Finite(c) = capacity_noiseless(5.0, 2.0).unwrap() else { panic!() };
        assert!((c - capacity(5.0, 2.0, 1e-9).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn randomized_upper() {
        assert!((randomized_code_upper(1.0, 2.0, 0.0).unwrap() - 0.5 * 1.5f64.ln()).abs() < 1e-15);
        assert_eq!(randomized_code_upper(3.0, 1.0, 1.0).unwrap(), capacity(3.0, 1.0, 1.0).unwrap());
        for p in [0.5, 1.0, 2.0, 5.0] {
            for lambda in [0.0, 0.5, 1.0, 3.0] {
                for sigma2 in [0.1, 1.0] {
                    let c = capacity(p, lambda, sigma2).unwrap();
                    let u = randomized_code_upper(p, lambda, sigma2).unwrap();
                    assert!(c <= u);
                    assert_eq!(c == u, p > lambda);
                }
            }
        }
    }

    #[test]
    fn q_upper_dominates_q() {
        assert_eq!(q_upper(0.0), 0.5);
        assert!((q_upper(1.0) - 0.303_265_329_856_317).abs() < 1e-12);
        assert!((q_upper(2.0) - 0.067_667_641_618_306).abs() < 1e-12);
        for k in 0..=200 {
            let y = k as f64 * 0.05;
            assert!(q_upper(y) >= q_function(y));
        }
    }

    #[test]
    fn xi_values() {
        assert_eq!(xi(0.0), 0.0);
        assert!((xi(1.0) - 0.5 * (2.0 - 3f64.sqrt())).abs() < 1e-15);
        for k in 0..=10_000 {
            let x = k as f64 / 10_000.0;
            assert!(xi(x) >= x * x / 16.0, "{x}");
            let naive = 0.5 * (1.0 + x - (1.0 + 2.0 * x).sqrt());
            assert!((xi(x) - naive).abs() < 1e-15);
        }
    }

    #[test]
    fn chi2_bound_values() {
        assert_eq!(chi2_tail_bound(10, 0.0), 1.0);
        let b = chi2_tail_bound(100, 1.0);
        assert!((b / (-100.0 * 0.5 * (2.0 - 3f64.sqrt())).exp() - 1.0).abs() < 1e-12);
        assert!((b - 1.519e-6).abs() < 1e-9);
    }

    #[test]
    fn sphere_cap_values() {
        assert!((sphere_cap_bound(3, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert!((sphere_cap_bound(20, 0.6).unwrap() - 2.0 * 0.64f64.powf(9.5)).abs() < 1e-15);
        assert!((sphere_cap_bound(20, 0.6).unwrap() - 0.0288).abs() < 1e-4);
        assert!(sphere_cap_bound(50, 0.999_999).unwrap() < 1e-100);
        let err = sphere_cap_bound(10, 0.05).unwrap_err();
        assert!(err.to_string().contains("1/sqrt(2*pi*n)"));
        assert!(sphere_cap_bound(10, 1.0).is_err());
        assert!(sphere_cap_bound(1, 0.5).is_err());
    }

    #[test]
    fn martingale_values() {
        assert_eq!(martingale_bound(10, 0.1, 0.5), 1.0);
        let b = martingale_bound(100, 0.5, 0.1);
        assert!((b.ln() + 100.0 * (0.5 * LN_2 - 0.1)).abs() < 1e-9);
        assert!((b - 1.95e-11).abs() < 0.01e-11);
    }

    #[test]
    fn doubly_exponential_values() {
        assert_eq!(doubly_exp_bound(10.0 / LN_2, 50, 0.1, 0.05), 1.0);
        let ln = doubly_exp_bound_ln(20.0, 100, 0.1, 0.05);
        assert!((ln + (20.0 * LN_2 - 10.0) * 5f64.exp()).abs() < 1e-9);
        assert!((ln + 573.31).abs() < 0.01);
        let mut prev = 0.0;
        for n in [10, 20, 40, 80] {
            let l = doubly_exp_bound_ln(20.0, n, 0.1, 0.05);
            assert!(l < prev);
            assert!(doubly_exp_bound_ln(25.0, n, 0.1, 0.05) < l);
            prev = l;
        }
    }

    #[test]
    fn net_cardinality_values() {
        assert!((net_cardinality_bound(1, 1.0, 0.5).unwrap().value.unwrap() - 4.0).abs() < 1e-12);
        assert!((net_cardinality_bound(2, 2.0, 1.0).unwrap().value.unwrap() - 16.0).abs() < 1e-12);
        let big = net_cardinality_bound(1000, 1.0, 0.01).unwrap();
        assert!(big.value.is_none());
        assert!((big.ln - 1000.0 * (2.0 * 1000f64.sqrt() / 0.01).ln()).abs() < 1e-12 * big.ln);
    }

    #[test]
    fn union_bound_arithmetic() {
        let eval = |n| union_success_lower(n, 0.4, 1.0, 0.1, 20.0, 0.1, 0.05).unwrap();
        // Exponential prefactors win for small n, the doubly exponential
        // factor takes over between n = 99 and n = 100.
        assert!(eval(60).success_lower < 0.0);
        assert!(eval(99).success_lower < 0.0);
        assert!(eval(100).success_lower > 0.96);
        assert!(eval(105).failure_ln < -50.0 * 10f64.ln());
        let mut prev = f64::NEG_INFINITY;
        for n in 100..400 {
            let s = eval(n).success_lower;
            assert!(s >= prev, "n={n}");
            prev = s;
        }
        let mut prev = f64::INFINITY;
        for n in [1000, 10_000, 100_000, 1_000_000] {
            let f = eval(n).failure_ln;
            assert!(f <= prev && f < -1e20, "n={n}: {f}");
            prev = f;
        }
        assert_eq!(prev, f64::NEG_INFINITY);
        let vacuous = union_success_lower(10, 0.4, 1.0, 0.1, 10.0, 0.1, 0.05).unwrap();
        assert!(vacuous.success_lower <= 0.0);
        assert!(matches!(
            union_success_lower(10, 0.4, 1.0, 0.1, 20.0, 0.05, 0.05),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn rate_condition() {
        let params = ChannelParams::new(100, 4.0, 1.0, 1.0).unwrap();
        let dp = DeltaParams {
            delta0: 0.05,
            delta1: 0.02,
            ..feasible_deltas()
        };
        assert!((delta2_prime(4.0, 0.1) - 0.39).abs() < 1e-15);
        let r = achievable_rate_condition(&params, &dp).unwrap();
        let expected = 0.495 * (3.61f64 / 2.29).ln_1p() - 0.07;
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.39847).abs() < 1e-5);
        let bad = DeltaParams { delta2: 4.0, ..dp };
        assert!(matches!(achievable_rate_condition(&params, &bad), Err(Error::Constraint(_))));
    }

    #[test]
    fn rate_condition_tends_to_capacity() {
        let cap = capacity(4.0, 1.0, 1.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=200 {
            let c = 1.0 / k as f64;
            let params = ChannelParams::new(100 * k, 4.0, 1.0, 1.0).unwrap();
            let dp = DeltaParams {
                delta0: 0.05 * c,
                delta1: 0.02 * c,
                delta2: 0.1 * c,
                ..feasible_deltas()
            };
            let r = achievable_rate_condition(&params, &dp).unwrap();
            assert!(r > prev && r < cap);
            prev = r;
        }
        assert!(cap - prev < 2e-3);
    }

    #[test]
    fn feasibility_examples() {
        let params = ChannelParams::new(100, 4.0, 1.0, 1.0).unwrap();
        assert!(feasibility_check(&params, &feasible_deltas()).is_empty());
        let names = |dp: DeltaParams| -> Vec<&str> {
            feasibility_check(&params, &dp).into_iter().map(|v| v.name).collect()
        };
        assert_eq!(names(DeltaParams { k: 10.0, ..feasible_deltas() }), ["K·ln2>10"]);
        assert!(names(DeltaParams { delta0: 1e-4, ..feasible_deltas() }).contains(&"delta0>delta1"));
        assert!(names(DeltaParams { eta: 0.01, ..feasible_deltas() }).contains(&"eta>sqrt(2·Lambda·sigma2·delta1)"));
        assert!(names(DeltaParams { delta2: 0.07, ..feasible_deltas() })
            .contains(&"delta2>2·eta+4·sigma2·sqrt(delta1)"));
        let quiet = ChannelParams::new(100, 4.0, 1.0, 0.05).unwrap();
        let v: Vec<_> = feasibility_check(&quiet, &DeltaParams { eta: 0.01, ..feasible_deltas() })
            .into_iter()
            .map(|v| v.name)
            .collect();
        assert!(v.contains(&"delta2<=sigma2"));
        assert!(full_power_assumption_holds(&quiet, &feasible_deltas()));
    }

    #[test]
    fn rate_condition_below_capacity_on_random_grid() {
        use rand::Rng;
        let mut rng = crate::rng::stream(3, crate::rng::Tag::Verify, &[]);
        let mut checked = 0;
        for _ in 0..2000 {
            let p = rng.random_range(1.5..10.0);
            let lambda = rng.random_range(0.0..1.0);
            let sigma2 = rng.random_range(0.2..2.0);
            let n = rng.random_range(10..10_000);
            let params = ChannelParams::new(n, p, lambda, sigma2).unwrap();
            let delta1 = rng.random_range(1e-6..1e-3);
            let eta = (2.0 * lambda * sigma2 * delta1).sqrt() * rng.random_range(1.01..2.0) + 1e-9;
            let dp = DeltaParams {
                delta0: delta1 * rng.random_range(1.5..10.0),
                delta1,
                delta2: rng.random_range(0.0..sigma2),
                eta,
                k: 20.0,
                epsilon: 0.1,
            };
            if feasibility_check(&params, &dp).is_empty() {
                let r = achievable_rate_condition(&params, &dp).unwrap();
                assert!(r < capacity(p, lambda, sigma2).unwrap());
                checked += 1;
            }
        }
        assert!(checked > 100, "{checked}");
    }

    #[test]
    fn report_json() {
        let params = ChannelParams::new(100, 4.0, 1.0, 1.0).unwrap();
        let report = BoundReport::new(&params, 0.2, &feasible_deltas()).unwrap();
        assert!(report.feasible());
        let v = report.to_json();
        assert_eq!(v["capacityNats"], significant(0.5 * 3f64.ln(), 12));
        assert!(v["netCardinalityBound_ln"].is_string());
        assert!(v["feasibilityViolations"].as_array().unwrap().is_empty());
        assert_eq!(v["rateCertified"], true);
        let bad = BoundReport::new(&params, 0.2, &DeltaParams { k: 10.0, ..feasible_deltas() }).unwrap();
        assert_eq!(bad.to_json()["feasibilityViolations"][0]["name"], "K·ln2>10");
    }
}
