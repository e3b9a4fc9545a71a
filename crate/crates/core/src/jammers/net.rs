use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{ChannelParams, RealVector};

/// Lattice boxes larger than this are not enumerated.
const MAX_BOX: f64 = 1e8;

/// A finite Euclidean ε-net of the jammer ball `‖s‖ ≤ √(nΛ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonNet {
    pub epsilon: f64,
    /// Spacing of the cubic lattice the net was cut from.
    pub pitch: f64,
    pub points: Vec<RealVector>,
}

impl EpsilonNet {
    /// Distance from `s` to the nearest net point.
    pub fn distance(&self, s: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| p.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }
}

/// Builds an ε-net from the cubic lattice of pitch `2ε/√n`, whose cells have
/// half-diagonal exactly `ε`.
///
/// Lattice points inside the ball are kept; points outside it but closer than
/// `√(nΛ) + ε` to the origin are projected onto the sphere. Projection onto
/// the ball is 1-Lipschitz, so the covering radius stays `ε`.
pub fn build_net(params: &ChannelParams, epsilon: f64, max_points: usize) -> Result<EpsilonNet> {
    params.validate()?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("net radius must be positive, got {epsilon}")));
    }
    let n = params.n;
    let radius = params.jammer_energy().sqrt();
    let pitch = 2.0 * epsilon / (n as f64).sqrt();
    let reach = radius + epsilon;
    let half = (reach / pitch).floor() as i64;
    let side = 2 * half + 1;
    let box_size = (side as f64).powi(n as i32);
    if box_size > MAX_BOX {
        return Err(Error::Budget {
            what: "epsilon-net points",
            required: ball_count_estimate(n, reach, pitch),
            budget: max_points as f64,
        });
    }
    let mut seen = BTreeSet::new();
    let mut points = Vec::new();
    let mut idx = vec![-half; n];
    loop {
        let q: Vec<f64> = idx.iter().map(|&m| m as f64 * pitch).collect();
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < reach {
            let p: Vec<f64> = if norm <= radius {
                q
            } else {
                q.iter().map(|x| x * radius / norm).collect()
            };
            let key: Vec<u64> = p.iter().map(|x| (x + 0.0).to_bits()).collect();
            if seen.insert(key) {
                points.push(RealVector::new(p));
                if points.len() > max_points {
                    return Err(Error::Budget {
                        what: "epsilon-net points",
                        required: ball_count_estimate(n, reach, pitch).max(points.len() as f64),
                        budget: max_points as f64,
                    });
                }
            }
        }
        // Odometer increment over the lattice box.
        let mut d = 0;
        loop {
            if d == n {
                return Ok(EpsilonNet {
                    epsilon,
                    pitch,
                    points,
                });
            }
            idx[d] += 1;
            if idx[d] <= half {
                break;
            }
            idx[d] = -half;
            d += 1;
        }
    }
}

/// Volume of the `n`-ball of radius `r` over the cell volume `h^n`.
fn ball_count_estimate(n: usize, r: f64, h: f64) -> f64 {
    let nf = n as f64;
    let ln = nf / 2.0 * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(nf / 2.0 + 1.0)
        + nf * (r / h).ln();
    ln.exp()
}
