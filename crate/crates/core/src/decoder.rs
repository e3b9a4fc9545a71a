//! Minimum-distance decoding at row granularity and the inner-product error
//! event used by the achievability analysis.
//!
//! Sending `x(i, t)` succeeds when the nearest codeword lies anywhere in row
//! `i`. Minimizers spread over two or more rows make the decoder declare `0`.
//!
//! The error event asks whether some wrong-row codeword `x(j, t')` satisfies
//! `⟨x(j,t'), x(i,t)+s+v⟩ ≥ nP + ⟨x(i,t), s+v⟩`, i.e. is at least as close to
//! the received word as the transmitted codeword. It ignores the other
//! codewords of row `i`, so it over-approximates the decoding error whenever
//! `keysPerRow > 1` and coincides with it when `keysPerRow = 1`.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::model::{dot, dot4, ensure_len, RealVector};
use crate::special::spherical_cap_tail;

/// Relative (to `nP`) absolute tolerance under which two squared distances
/// count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Decoded message, or `0` for a cross-row tie.
    pub declared: u128,
    /// Row of the nearest codeword.
    pub argmin_row: u128,
    /// Minimizers were found in at least two rows.
    pub tie: bool,
}

#[inline]
fn sq_dist(y_norm_sq: f64, word_norm_sq: f64, inner: f64) -> f64 {
    y_norm_sq + word_norm_sq - 2.0 * inner
}

fn tie_tolerance(cb: &Codebook) -> f64 {
    TIE_TOLERANCE * cb.params().codeword_energy()
}

/// Minimum-distance decoding of `y`.
pub fn decode(cb: &Codebook, y: &[f64]) -> Result<DecodeResult> {
    ensure_len(cb.n(), y.len())?;
    let y2 = dot(y, y);
    let mut best = (f64::INFINITY, 0u128);
    let mut best_other = f64::INFINITY;
    let _ = cb.scan(|row, _, w, norm| {
        let d = sq_dist(y2, norm, dot(w, y));
        if d < best.0 {
            if row != best.1 {
                best_other = best.0;
            }
            best = (d, row);
        } else if row != best.1 && d < best_other {
            best_other = d;
        }
        ControlFlow::Continue(())
    })?;
    let tie = best_other <= best.0 + tie_tolerance(cb);
    Ok(DecodeResult {
        declared: if tie { 0 } else { best.1 },
        argmin_row: best.1,
        tie,
    })
}

/// Whether decoding `y` fails to return `i`; equivalent to
/// `decode(cb, y)?.declared != i` but stops at the first wrong-row codeword
/// that is as close as the best codeword of row `i`.
pub fn decode_error(cb: &Codebook, i: u128, y: &[f64]) -> Result<bool> {
    ensure_len(cb.n(), y.len())?;
    cb.check_message(i)?;
    let y2 = dot(y, y);
    let own = best_in_row(cb, i, y, y2);
    let limit = own + tie_tolerance(cb);
    let flow = cb.scan(|row, _, w, norm| {
        if row != i && sq_dist(y2, norm, dot(w, y)) <= limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(flow.is_break())
}

fn best_in_row(cb: &Codebook, i: u128, y: &[f64], y2: f64) -> f64 {
    (1..=cb.keys_per_row())
        .map(|t| {
            let w = cb.codeword_unchecked(i, t);
            sq_dist(y2, w.norm_sq(), dot(&w, y))
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_event_args(cb: &Codebook, i: u128, t: u64, s: &[f64], v: &[f64]) -> Result<()> {
    cb.check_message(i)?;
    cb.check_key(t)?;
    ensure_len(cb.n(), s.len())?;
    ensure_len(cb.n(), v.len())
}

/// The inner-product error event for transmitted codeword `x(i, t)`, state
/// `s` and noise `v`.
pub fn error_event(cb: &Codebook, i: u128, t: u64, s: &[f64], v: &[f64]) -> Result<bool> {
    check_event_args(cb, i, t, s, v)?;
    let x = cb.codeword_unchecked(i, t);
    let w: Vec<f64> = s.iter().zip(v).map(|(a, b)| a + b).collect();
    let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
    let rhs = cb.params().codeword_energy() + dot(&x, &w);
    let flow = cb.scan(|row, _, xj, _| {
        if row != i && dot(xj, &y) >= rhs {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(flow.is_break())
}

/// The same event in distance form: some wrong-row codeword satisfies
/// `‖x(i,t)+s+v − x(j,t')‖² ≤ ‖s+v‖²`.
pub fn error_event_distance(
    cb: &Codebook,
    i: u128,
    t: u64,
    s: &[f64],
    v: &[f64],
) -> Result<bool> {
    check_event_args(cb, i, t, s, v)?;
    let x = cb.codeword_unchecked(i, t);
    let w: Vec<f64> = s.iter().zip(v).map(|(a, b)| a + b).collect();
    let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
    let radius = dot(&w, &w);
    let flow = cb.scan(|row, _, xj, _| {
        let d: f64 = y.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
        if row != i && d <= radius {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(flow.is_break())
}

/// Which error indicator an estimate counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CountingMode {
    /// The decoder's output differs from the sent message.
    Operational,
    /// The inner-product error event holds.
    Predicate,
}

impl CountingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CountingMode::Operational => "operational",
            CountingMode::Predicate => "predicate",
        }
    }
}

/// Conditional error probability over the random-code ensemble.
///
/// Row `i` is taken from `cb`; the `(M-1)·keysPerRow` wrong-row codewords are
/// treated as fresh independent uniform draws on the sphere. Each one beats
/// the threshold with probability `p = Pr[U₁ ≥ c]`, so the error probability
/// given `(x(i,t), s, v)` is `1 − (1 − p)^{(M-1)K}`.
pub fn ensemble_error_probability(
    cb: &Codebook,
    i: u128,
    t: u64,
    s: &[f64],
    v: &[f64],
    mode: CountingMode,
) -> Result<f64> {
    check_event_args(cb, i, t, s, v)?;
    let wrong = (cb.messages() - 1) as f64 * cb.keys_per_row() as f64;
    if wrong == 0.0 {
        return Ok(0.0);
    }
    let energy = cb.params().codeword_energy();
    let x = cb.codeword_unchecked(i, t);
    let w: Vec<f64> = s.iter().zip(v).map(|(a, b)| a + b).collect();
    let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
    let y2 = dot(&y, &y);
    // Error iff ⟨X', y⟩ ≥ threshold for some wrong codeword X'.
    let threshold = match mode {
        CountingMode::Predicate => energy + dot(&x, &w),
        CountingMode::Operational => {
            let own = best_in_row(cb, i, &y, y2);
            (y2 + energy - own - tie_tolerance(cb)) / 2.0
        }
    };
    let scale = energy.sqrt() * y2.sqrt();
    let p = if scale == 0.0 {
        if threshold <= 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        spherical_cap_tail(cb.n(), threshold / scale)
    };
    if p >= 1.0 {
        return Ok(1.0);
    }
    Ok(-(wrong * (-p).ln_1p()).exp_m1())
}

/// Operational or predicate error for one trial, dispatching on the
/// codebook's storage mode. Ensemble codebooks return a probability, the
/// others `0` or `1`.
pub(crate) fn trial_error(
    cb: &Codebook,
    i: u128,
    t: u64,
    s: &[f64],
    v: &[f64],
    mode: CountingMode,
) -> Result<f64> {
    if !cb.is_scannable() {
        return ensemble_error_probability(cb, i, t, s, v, mode);
    }
    let hit = match mode {
        CountingMode::Predicate => error_event(cb, i, t, s, v)?,
        CountingMode::Operational => {
            let x = cb.codeword_unchecked(i, t);
            let y: Vec<f64> = x.iter().zip(s).zip(v).map(|((a, b), c)| a + b + c).collect();
            decode_error(cb, i, &y)?
        }
    };
    Ok(if hit { 1.0 } else { 0.0 })
}

/// One trial of a batched evaluation: sent codeword `x(i, t)`, state and
/// noise.
pub(crate) struct TrialInput {
    pub i: u128,
    pub t: u64,
    pub s: RealVector,
    pub v: RealVector,
}

/// Error indicators for a batch of trials, computed in a single pass over
/// the codebook. Item by item the result equals [`trial_error`] on a
/// scannable codebook; batching only amortizes the memory traffic of the
/// scan over the batch.
pub(crate) fn batch_errors(cb: &Codebook, batch: &[TrialInput], mode: CountingMode) -> Result<Vec<bool>> {
    require_scannable(cb)?;
    let energy = cb.params().codeword_energy();
    let tol = tie_tolerance(cb);
    // Per item: received word and the bound a wrong codeword must reach.
    let mut ys = Vec::with_capacity(batch.len());
    let mut limits = Vec::with_capacity(batch.len());
    let mut y2s = Vec::with_capacity(batch.len());
    for item in batch {
        check_event_args(cb, item.i, item.t, &item.s, &item.v)?;
        let x = cb.codeword_unchecked(item.i, item.t);
        match mode {
            CountingMode::Operational => {
                let y: Vec<f64> = x.iter().zip(&*item.s).zip(&*item.v).map(|((a, b), c)| a + b + c).collect();
                let y2 = dot(&y, &y);
                limits.push(best_in_row(cb, item.i, &y, y2) + tol);
                y2s.push(y2);
                ys.push(y);
            }
            CountingMode::Predicate => {
                let w: Vec<f64> = item.s.iter().zip(&*item.v).map(|(a, b)| a + b).collect();
                let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a + b).collect();
                limits.push(energy + dot(&x, &w));
                y2s.push(0.0);
                ys.push(y);
            }
        }
    }
    let mut hit = vec![false; batch.len()];
    let mut open = batch.len();
    let mut inner = vec![0.0; batch.len()];
    let _ = cb.scan(|row, _, w, norm| {
        let mut quads = ys.chunks_exact(4);
        for (q, out) in (&mut quads).zip(inner.chunks_exact_mut(4)) {
            out.copy_from_slice(&dot4(w, [&q[0], &q[1], &q[2], &q[3]]));
        }
        let done = batch.len() - quads.remainder().len();
        for (b, y) in quads.remainder().iter().enumerate() {
            inner[done + b] = dot(w, y);
        }
        for (b, item) in batch.iter().enumerate() {
            if hit[b] || row == item.i {
                continue;
            }
            let err = match mode {
                CountingMode::Operational => sq_dist(y2s[b], norm, inner[b]) <= limits[b],
                CountingMode::Predicate => inner[b] >= limits[b],
            };
            if err {
                hit[b] = true;
                open -= 1;
            }
        }
        if open == 0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(hit)
}

/// Fails with a configuration error when `cb` cannot be scanned.
pub fn require_scannable(cb: &Codebook) -> Result<()> {
    if cb.is_scannable() {
        Ok(())
    } else {
        Err(Error::Config("operation needs an enumerable codebook".into()))
    }
}
