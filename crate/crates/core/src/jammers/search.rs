use serde::{Deserialize, Serialize};

use super::JammerStrategy;
use crate::codebook::{sample_sphere, Codebook};
use crate::decoder::CountingMode;
use crate::error::{Error, Result};
use crate::estimator::{estimate_emax, estimate_error, EmaxEstimate, ErrorEstimate, MessageSample};
use crate::model::{check_power, ChannelParams, RealVector};
use crate::rng::{stream, Tag};

/// The best state found by a search and its error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchOutcome {
    pub state: RealVector,
    pub estimate: ErrorEstimate,
    /// Position of the state in the candidate list.
    pub index: usize,
}

/// A single state chosen for all messages at once, scored by `e_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JointSearchOutcome {
    pub state: RealVector,
    pub emax: EmaxEstimate,
    pub index: usize,
}

/// `count` states uniform on the jammer sphere (the origin when `Λ = 0`).
pub fn random_candidates(params: &ChannelParams, count: usize, seed: u64) -> Vec<RealVector> {
    if params.jammer_power == 0.0 {
        return vec![RealVector::zeros(params.n)];
    }
    let radius = params.jammer_energy().sqrt();
    (0..count as u64)
        .map(|k| sample_sphere(&mut stream(seed, Tag::Search, &[k]), params.n, radius))
        .collect()
}

fn check_candidates(cb: &Codebook, candidates: &[RealVector]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::Config("candidate list is empty".into()));
    }
    let lambda = cb.params().jammer_power;
    for (k, s) in candidates.iter().enumerate() {
        if s.len() != cb.n() {
            return Err(Error::Dimension {
                expected: cb.n(),
                found: s.len(),
            });
        }
        if !check_power(s, lambda) {
            return Err(Error::Constraint(format!("candidate {k} exceeds the jammer budget")));
        }
    }
    Ok(())
}

/// Returns the candidate with the largest estimated `e(s, i)`. Every
/// candidate is scored on the same trial streams, so the comparison is
/// between paired samples. Ties go to the earlier candidate.
pub fn attack_search(
    cb: &Codebook,
    i: u128,
    candidates: &[RealVector],
    trials: u64,
    seed: u64,
    mode: CountingMode,
) -> Result<SearchOutcome> {
    check_candidates(cb, candidates)?;
    let mut best: Option<SearchOutcome> = None;
    for (index, s) in candidates.iter().enumerate() {
        let estimate = estimate_error(cb, i, &JammerStrategy::fixed(s.clone()), trials, seed, mode)?;
        if best.as_ref().is_none_or(|b| estimate.errors > b.estimate.errors) {
            best = Some(SearchOutcome {
                state: s.clone(),
                estimate,
                index,
            });
        }
    }
    Ok(best.expect("nonempty candidate list"))
}

/// Returns the candidate with the largest estimated `e_max` when the same
/// state is used against every sampled message.
pub fn attack_search_joint(
    cb: &Codebook,
    candidates: &[RealVector],
    trials: u64,
    sample: &MessageSample,
    seed: u64,
    mode: CountingMode,
) -> Result<JointSearchOutcome> {
    check_candidates(cb, candidates)?;
    let mut best: Option<JointSearchOutcome> = None;
    for (index, s) in candidates.iter().enumerate() {
        let emax = estimate_emax(cb, &JammerStrategy::fixed(s.clone()), trials, sample, seed, mode)?;
        if best.as_ref().is_none_or(|b| emax.estimate.errors > b.emax.estimate.errors) {
            best = Some(JointSearchOutcome {
                state: s.clone(),
                emax,
                index,
            });
        }
    }
    Ok(best.expect("nonempty candidate list"))
}

/// Coordinate hill climbing from `start`: each sweep tries `±step` along
/// every axis, projects onto the jammer ball, and keeps a move when it
/// strictly raises the error count on the shared trial streams.
#[allow(clippy::too_many_arguments)]
pub fn hill_climb(
    cb: &Codebook,
    i: u128,
    start: RealVector,
    step: f64,
    sweeps: usize,
    trials: u64,
    seed: u64,
    mode: CountingMode,
) -> Result<SearchOutcome> {
    check_candidates(cb, std::slice::from_ref(&start))?;
    let lambda = cb.params().jammer_power;
    let score = |s: &RealVector| estimate_error(cb, i, &JammerStrategy::fixed(s.clone()), trials, seed, mode);
    let mut estimate = score(&start)?;
    let mut state = start;
    for _ in 0..sweeps {
        let mut moved = false;
        for d in 0..cb.n() {
            for sign in [1.0, -1.0] {
                let mut next = state.clone();
                next[d] += sign * step;
                let next = super::enforce_budget(next, lambda);
                let e = score(&next)?;
                if e.errors > estimate.errors {
                    state = next;
                    estimate = e;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
    Ok(SearchOutcome {
        state,
        estimate,
        index: 0,
    })
}
