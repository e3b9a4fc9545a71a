//! Seeded Monte Carlo estimation of error probabilities.
//!
//! Trial `k` of a run with master seed `seed` draws the jammer's randomness,
//! the encoder's key and the noise from three separate streams derived from
//! `(seed, k)`. Error counts are integers, so a run gives the same estimate
//! whatever the number of worker threads.
//!
//! Ensemble codebooks return an error probability per trial rather than an
//! indicator; the trial then counts an error when a fourth uniform draw falls
//! below that probability. Both counting modes share that draw, which keeps
//! predicate counts above operational ones trial by trial.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::codebook::{auto_storage, build_codebook, Codebook, StorageMode};
use crate::decoder::{batch_errors, trial_error, CountingMode, TrialInput};
use crate::error::{Error, Result};
use crate::jammers::{JammerStrategy, PreparedJammer};
use crate::model::{sample_noise, ChannelParams, CodeParams};
use crate::rng::{derive_seed, stream, wide, Tag};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;

/// Up to this many messages `e_max` is always computed over every message.
pub const EMAX_ENUMERATION_LIMIT: u128 = 1024;

/// An error-probability estimate with its Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorEstimate {
    pub errors: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mode: CountingMode,
    /// Wrong rows were integrated over the random-code ensemble.
    pub ensemble: bool,
    pub seed: u64,
}

impl ErrorEstimate {
    pub fn from_counts(errors: u64, trials: u64, mode: CountingMode, ensemble: bool, seed: u64) -> Self {
        assert!(trials >= 1 && errors <= trials);
        let (ci_low, ci_high) = wilson_ci(errors, trials, CONFIDENCE);
        let p_hat = errors as f64 / trials as f64;
        Self {
            errors,
            trials,
            p_hat,
            ci_low: ci_low.min(p_hat),
            ci_high: ci_high.max(p_hat),
            mode,
            ensemble,
            seed,
        }
    }

    /// `operational`, `predicate`, or either with an `-ensemble` suffix.
    pub fn mode_label(&self) -> String {
        if self.ensemble {
            format!("{}-ensemble", self.mode.as_str())
        } else {
            self.mode.as_str().to_string()
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// Wilson score interval for `errors` successes out of `trials`.
///
/// # Panics
///
/// Panics if `trials == 0`, `errors > trials` or `confidence` is outside
/// `(0, 1)`.
pub fn wilson_ci(errors: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials >= 1 && errors <= trials, "need errors <= trials and trials >= 1");
    assert!(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
    let z = std::f64::consts::SQRT_2 * erfc_inv(1.0 - confidence);
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Trials decoded together in one pass over an enumerable codebook.
const BATCH: u64 = 32;

fn trial_input(cb: &Codebook, i: u128, jammer: &PreparedJammer, seed: u64, k: u64) -> Result<TrialInput> {
    let s = jammer.emit(cb, &mut stream(seed, Tag::TrialJammer, &[k]))?;
    let tx = cb.encode(i, &mut stream(seed, Tag::TrialKey, &[k]))?;
    let params = cb.params();
    let v = sample_noise(&mut stream(seed, Tag::TrialNoise, &[k]), params.n, params.sigma2);
    Ok(TrialInput { i, t: tx.key, s, v })
}

fn ensemble_hit(cb: &Codebook, input: &TrialInput, seed: u64, k: u64, mode: CountingMode) -> Result<bool> {
    let p = trial_error(cb, input.i, input.t, &input.s, &input.v, mode)?;
    let u: f64 = stream(seed, Tag::TrialEnsemble, &[k]).random();
    Ok(u < p)
}

/// Counts errors over trials `0..trials`, whose inputs come from `input`.
fn count_errors<F>(cb: &Codebook, trials: u64, seed: u64, mode: CountingMode, input: F) -> Result<u64>
where
    F: Fn(u64) -> Result<TrialInput> + Sync,
{
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if cb.is_scannable() {
        (0..trials.div_ceil(BATCH))
            .into_par_iter()
            .map(|b| {
                let batch = (b * BATCH..trials.min((b + 1) * BATCH))
                    .map(&input)
                    .collect::<Result<Vec<_>>>()?;
                let hits = batch_errors(cb, &batch, mode)?;
                Ok::<u64, Error>(hits.into_iter().filter(|&e| e).count() as u64)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    } else {
        (0..trials)
            .into_par_iter()
            .map(|k| ensemble_hit(cb, &input(k)?, seed, k, mode).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    }
}

/// Outcome of trial `k`: whether an error is counted.
pub fn trial_outcome(
    cb: &Codebook,
    i: u128,
    jammer: &PreparedJammer,
    seed: u64,
    k: u64,
    mode: CountingMode,
) -> Result<bool> {
    let input = trial_input(cb, i, jammer, seed, k)?;
    if cb.is_scannable() {
        Ok(trial_error(cb, i, input.t, &input.s, &input.v, mode)? >= 1.0)
    } else {
        ensemble_hit(cb, &input, seed, k, mode)
    }
}

/// Estimates `e(s, i)` for an already prepared jammer. Gives the same count
/// as summing [`trial_outcome`] over `k = 0..trials`.
pub fn estimate_prepared(
    cb: &Codebook,
    i: u128,
    jammer: &PreparedJammer,
    trials: u64,
    seed: u64,
    mode: CountingMode,
) -> Result<ErrorEstimate> {
    let errors = count_errors(cb, trials, seed, mode, |k| trial_input(cb, i, jammer, seed, k))?;
    Ok(ErrorEstimate::from_counts(
        errors,
        trials,
        mode,
        cb.mode() == StorageMode::Ensemble,
        seed,
    ))
}

/// Message of trial `k` in [`estimate_average`].
pub fn trial_message(cb: &Codebook, seed: u64, k: u64) -> u128 {
    stream(seed, Tag::TrialMessage, &[k]).random_range(1..=cb.messages())
}

/// Estimates the error averaged over messages: trial `k` sends
/// [`trial_message`]`(cb, seed, k)`, with the strategy prepared for it.
pub fn estimate_average(
    cb: &Codebook,
    strategy: &JammerStrategy,
    trials: u64,
    seed: u64,
    mode: CountingMode,
) -> Result<ErrorEstimate> {
    let errors = count_errors(cb, trials, seed, mode, |k| {
        let i = trial_message(cb, seed, k);
        let jammer = strategy.prepare(cb, i, seed)?;
        trial_input(cb, i, &jammer, seed, k)
    })?;
    Ok(ErrorEstimate::from_counts(
        errors,
        trials,
        mode,
        cb.mode() == StorageMode::Ensemble,
        seed,
    ))
}

/// Estimates the error probability of message `i` under `strategy`.
pub fn estimate_error(
    cb: &Codebook,
    i: u128,
    strategy: &JammerStrategy,
    trials: u64,
    seed: u64,
    mode: CountingMode,
) -> Result<ErrorEstimate> {
    let jammer = strategy.prepare(cb, i, seed)?;
    estimate_prepared(cb, i, &jammer, trials, seed, mode)
}

/// Which messages an `e_max` estimate visits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum MessageSample {
    /// Every message.
    All,
    /// `count` distinct messages drawn uniformly (every message when
    /// `M ≤ 1024`).
    Random { count: usize },
    /// An explicit list of messages.
    List { messages: Vec<u64> },
}

/// Seed of the per-message run inside an `e_max` estimate.
pub fn message_seed(seed: u64, i: u128) -> u64 {
    derive_seed(seed, Tag::MessageSample, &wide(i))
}

/// The messages visited by an `e_max` estimate, in increasing order.
pub fn sampled_messages(cb: &Codebook, sample: &MessageSample, seed: u64) -> Result<Vec<u128>> {
    let m = cb.messages();
    let picked: BTreeSet<u128> = match sample {
        MessageSample::List { messages } => {
            if messages.is_empty() {
                return Err(Error::Config("message list is empty".into()));
            }
            for &j in messages {
                cb.codeword(j as u128, 1)?;
            }
            messages.iter().map(|&j| j as u128).collect()
        }
        _ if m <= EMAX_ENUMERATION_LIMIT => (1..=m).collect(),
        MessageSample::All => {
            return Err(Error::Budget {
                what: "e_max enumeration (messages)",
                required: m as f64,
                budget: EMAX_ENUMERATION_LIMIT as f64,
            })
        }
        MessageSample::Random { count } => {
            if *count == 0 {
                return Err(Error::Config("message sample count must be positive".into()));
            }
            let mut rng = stream(seed, Tag::MessageSample, &[]);
            let mut set = BTreeSet::new();
            while set.len() < *count {
                set.insert(rng.random_range(1..=m));
            }
            set
        }
    };
    Ok(picked.into_iter().collect())
}

/// Result of an `e_max` estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EmaxEstimate {
    pub worst_message: u128,
    pub estimate: ErrorEstimate,
    /// Per-message estimates, in increasing message order.
    pub per_message: Vec<(u128, ErrorEstimate)>,
    /// Only part of the messages were visited: the maximum is a lower bound
    /// on `e_max`.
    pub sampled: bool,
}

impl EmaxEstimate {
    /// Counts pooled over the visited messages: the average error.
    pub fn pooled(&self) -> ErrorEstimate {
        let errors = self.per_message.iter().map(|(_, e)| e.errors).sum();
        let trials = self.per_message.iter().map(|(_, e)| e.trials).sum();
        ErrorEstimate::from_counts(errors, trials, self.estimate.mode, self.estimate.ensemble, self.estimate.seed)
    }
}

/// Estimates `e_max` under `strategy`. Message `i` runs with
/// [`message_seed`]`(seed, i)`; ties go to the smaller message.
pub fn estimate_emax(
    cb: &Codebook,
    strategy: &JammerStrategy,
    trials: u64,
    sample: &MessageSample,
    seed: u64,
    mode: CountingMode,
) -> Result<EmaxEstimate> {
    let messages = sampled_messages(cb, sample, seed)?;
    let sampled = (messages.len() as u128) < cb.messages();
    let mut per_message = Vec::with_capacity(messages.len());
    for i in messages {
        per_message.push((i, estimate_error(cb, i, strategy, trials, message_seed(seed, i), mode)?));
    }
    let (worst_message, estimate) = per_message
        .iter()
        .fold(None::<(u128, ErrorEstimate)>, |best, &(i, e)| match best {
            Some((_, b)) if b.errors >= e.errors => best,
            _ => Some((i, e)),
        })
        .expect("at least one message");
    Ok(EmaxEstimate {
        worst_message,
        estimate,
        per_message,
        sampled,
    })
}

/// One row of a rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub rate: f64,
    pub messages: u128,
    pub keys_per_row: u64,
    /// `None` when the row was skipped.
    pub emax: Option<EmaxEstimate>,
    /// Why the row was skipped.
    pub skipped: Option<String>,
}

/// Sweep settings beyond the channel and the strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub delta0: f64,
    pub trials: u64,
    pub seed: u64,
    pub mode: CountingMode,
    pub sample: MessageSample,
    /// `None` picks [`auto_storage`] per rate.
    pub storage: Option<StorageMode>,
}

/// Codebook seed for the `index`-th rate of a sweep.
pub fn sweep_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, Tag::Sweep, &[index as u64])
}

/// One `e_max` estimate per rate, each on a fresh codebook. Rows whose
/// codebook exceeds the resource budget are skipped with a marker.
pub fn rate_sweep(
    params: &ChannelParams,
    rates: &[f64],
    strategy: &JammerStrategy,
    options: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(rates.len());
    for (index, &rate) in rates.iter().enumerate() {
        let code = CodeParams::new(params.n, rate, options.delta0)?;
        let storage = options.storage.unwrap_or_else(|| auto_storage(&code));
        let seed = sweep_seed(options.seed, index);
        let mut row = SweepRow {
            rate,
            messages: code.messages(),
            keys_per_row: code.keys_per_row(),
            emax: None,
            skipped: None,
        };
        let outcome = build_codebook(seed, *params, code, storage)
            .and_then(|cb| estimate_emax(&cb, strategy, options.trials, &options.sample, seed, options.mode));
        match outcome {
            Ok(e) => row.emax = Some(e),
            Err(e @ Error::Budget { .. }) => row.skipped = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("thread count must be positive".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {t} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
