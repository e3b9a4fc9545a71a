//! Exact tail probabilities used by the ensemble decoder and as references
//! in the bound verifiers.

use statrs::function::beta::beta_reg;

/// Gaussian tail `Q(y) = Pr[Z > y]`.
pub fn q_function(y: f64) -> f64 {
    0.5 * libm::erfc(y / std::f64::consts::SQRT_2)
}

/// `Pr[U₁ ≥ c]` for `U` uniform on the unit sphere of `R^n`.
///
/// `U₁²` is `Beta(1/2, (n-1)/2)`, so for `c ≥ 0` the tail is
/// `½ · I_{1-c²}((n-1)/2, 1/2)`; negative thresholds use symmetry.
pub fn spherical_cap_tail(n: usize, c: f64) -> f64 {
    assert!(n >= 1);
    if c.is_nan() {
        return f64::NAN;
    }
    if c > 1.0 {
        return 0.0;
    }
    if c <= -1.0 {
        return 1.0;
    }
    if n == 1 {
        return 0.5;
    }
    let half = 0.5 * beta_reg((n as f64 - 1.0) / 2.0, 0.5, (1.0 - c * c).max(0.0));
    if c >= 0.0 {
        half
    } else {
        1.0 - half
    }
}
