//! Channel model: `y = x + s + v` with peak power constraints on `x` and `s`
//! and i.i.d. Gaussian noise `v`.

use std::ops::{Deref, DerefMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on the peak-power comparison, absorbing the rounding error
/// of `‖v‖²`.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// A block of `n` real channel symbols.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|x| c * x).collect())
    }
}

impl From<Vec<f64>> for RealVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for RealVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for RealVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Inner product with eight independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results do not depend on the platform.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        let x: &[f64; 8] = x.try_into().expect("chunk of 8");
        let y: &[f64; 8] = y.try_into().expect("chunk of 8");
        for j in 0..8 {
            acc[j] += x[j] * y[j];
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// `[dot(w, y₀), …, dot(w, y₃)]`, bit-identical to four [`dot`] calls but
/// reading `w` once.
#[inline]
pub(crate) fn dot4(w: &[f64], ys: [&[f64]; 4]) -> [f64; 4] {
    let n = w.len();
    let full = n - n % 8;
    let mut acc = [[0.0f64; 8]; 4];
    for base in (0..full).step_by(8) {
        let x: &[f64; 8] = w[base..base + 8].try_into().expect("chunk of 8");
        for (a, y) in acc.iter_mut().zip(ys) {
            let y: &[f64; 8] = y[base..base + 8].try_into().expect("chunk of 8");
            for j in 0..8 {
                a[j] += x[j] * y[j];
            }
        }
    }
    let mut out = [0.0; 4];
    for ((o, a), y) in out.iter_mut().zip(&acc).zip(ys) {
        let tail: f64 = w[full..].iter().zip(&y[full..]).map(|(p, q)| p * q).sum();
        *o = ((a[0] + a[1]) + (a[2] + a[3])) + ((a[4] + a[5]) + (a[6] + a[7])) + tail;
    }
    out
}

pub(crate) fn ensure_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Block length and the three per-symbol power parameters of a channel
/// instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Block length.
    pub n: usize,
    /// Transmit power per symbol.
    #[serde(rename = "P")]
    pub power: f64,
    /// Jammer power per symbol.
    #[serde(rename = "Lambda")]
    pub jammer_power: f64,
    /// Noise variance per symbol.
    pub sigma2: f64,
}

impl ChannelParams {
    pub fn new(n: usize, power: f64, jammer_power: f64, sigma2: f64) -> Result<Self> {
        let p = Self {
            n,
            power,
            jammer_power,
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("block length n must be at least 1".into()));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::Config(format!("P must be positive, got {}", self.power)));
        }
        if !(self.jammer_power.is_finite() && self.jammer_power >= 0.0) {
            return Err(Error::Config(format!(
                "Lambda must be non-negative, got {}",
                self.jammer_power
            )));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::Config(format!(
                "sigma2 must be non-negative, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// Transmit energy budget `nP`.
    pub fn codeword_energy(&self) -> f64 {
        self.n as f64 * self.power
    }

    /// Jammer energy budget `nΛ`.
    pub fn jammer_energy(&self) -> f64 {
        self.n as f64 * self.jammer_power
    }
}

/// Rate and stochastic-expansion exponent, with the derived message count
/// `M = ⌈e^{nR}⌉` and keys per message `⌈e^{nδ₀}⌉`.
///
/// The counts are computed at construction and cannot be set independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    rate: f64,
    delta0: f64,
    messages: u128,
    keys_per_row: u64,
}

impl CodeParams {
    pub fn new(n: usize, rate: f64, delta0: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::Config(format!("rate must be non-negative, got {rate}")));
        }
        if !(delta0.is_finite() && delta0 >= 0.0) {
            return Err(Error::Config(format!("delta0 must be non-negative, got {delta0}")));
        }
        let messages = ceil_exp(n as f64 * rate)
            .ok_or_else(|| Error::Config(format!("e^(nR) overflows for n={n}, R={rate}")))?;
        let keys_per_row = ceil_exp(n as f64 * delta0)
            .and_then(|k| u64::try_from(k).ok())
            .ok_or_else(|| {
                Error::Config(format!("e^(n delta0) overflows for n={n}, delta0={delta0}"))
            })?;
        Ok(Self {
            rate,
            delta0,
            messages,
            keys_per_row,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// Number of messages `M`.
    pub fn messages(&self) -> u128 {
        self.messages
    }

    /// Codewords per message.
    pub fn keys_per_row(&self) -> u64 {
        self.keys_per_row
    }

    /// Total codeword count `M · keysPerRow`, as a float (it may exceed every
    /// integer type for large rates).
    pub fn total_codewords(&self) -> f64 {
        self.messages as f64 * self.keys_per_row as f64
    }
}

/// `⌈e^x⌉`, ignoring the last few ulps of `exp` so that `x = ln k` gives `k`.
fn ceil_exp(x: f64) -> Option<u128> {
    let v = (x.exp() * (1.0 - 1e-12)).ceil();
    if v.is_finite() && v < u128::MAX as f64 {
        Some(v as u128)
    } else {
        None
    }
}

/// `y = x + s + v`, elementwise.
pub fn apply_channel(x: &[f64], s: &[f64], v: &[f64]) -> Result<RealVector> {
    ensure_len(x.len(), s.len())?;
    ensure_len(x.len(), v.len())?;
    Ok(x.iter()
        .zip(s)
        .zip(v)
        .map(|((a, b), c)| a + b + c)
        .collect::<Vec<_>>()
        .into())
}

/// `n` i.i.d. draws from `N(0, sigma2)`.
///
/// # Panics
///
/// Panics if `sigma2` is negative or not finite.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, n: usize, sigma2: f64) -> RealVector {
    assert!(sigma2.is_finite() && sigma2 >= 0.0, "noise variance must be non-negative");
    if sigma2 == 0.0 {
        return RealVector::zeros(n);
    }
    let sd = sigma2.sqrt();
    (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect::<Vec<_>>()
        .into()
}

/// Peak power check `‖v‖² ≤ n · budget`, up to a `1e-9` relative slack.
pub fn check_power(v: &[f64], per_symbol_budget: f64) -> bool {
    dot(v, v) <= v.len() as f64 * per_symbol_budget * (1.0 + POWER_TOLERANCE)
}
