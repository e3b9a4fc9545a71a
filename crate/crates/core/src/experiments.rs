//! Experiment drivers.
//!
//! An [`ExperimentSpec`] fully determines a table of error estimates: every
//! codebook and trial seed is derived from the master seed and the position
//! of the grid point in the spec. Rows come out in spec order and carry the
//! master seed and the spec hash, so any table can be regenerated byte for
//! byte from its spec.

use std::io::{Read, Write};
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codebook::{auto_storage, build_codebook, Codebook, StorageMode};
use crate::decoder::CountingMode;
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_average, estimate_emax, ErrorEstimate, MessageSample, EMAX_ENUMERATION_LIMIT,
};
use crate::format::significant;
use crate::jammers::JammerStrategy;
use crate::model::{ChannelParams, CodeParams};
use crate::rng::{derive_seed, stream, Tag};

/// Largest block length an experiment accepts.
pub const MAX_BLOCK_LENGTH: usize = 128;

/// Largest number of multiply-adds an experiment may plan for.
pub const COMPUTE_BUDGET: f64 = 1e13;

/// Significant digits of every float in the CSV output.
pub const CSV_DIGITS: usize = 9;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 16] = [
    "name", "n", "P", "Lambda", "sigma2", "R", "delta0", "strategy", "mode", "trials", "errors",
    "p_hat", "ci_low", "ci_high", "seed", "spec_hash",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExperimentKind {
    /// `e_max` per strategy over block lengths and rates.
    Achievability,
    /// Symmetrizing attack with uniformly drawn fake messages.
    Converse,
    /// `e_max` per strategy over a grid of `P/Λ` ratios.
    PhaseTransition,
}

/// Rate and key exponent, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    #[serde(rename = "R")]
    pub rate: f64,
    pub delta0: f64,
}

fn default_modes() -> Vec<CountingMode> {
    vec![CountingMode::Operational]
}

fn default_sample() -> MessageSample {
    MessageSample::Random { count: 2 }
}

/// A complete experiment definition.
///
/// `blockLengths` and `rates` default to the single values in `channel` and
/// `code`. A phase transition replaces `P` by `ratio·Λ` for each entry of
/// `powerRatios`. A converse runs the symmetrizing jammer against `fakes`
/// uniformly drawn fake messages, `trials` trials each, and takes no
/// `strategies`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub channel: ChannelParams,
    pub code: CodeSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_lengths: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub power_ratios: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strategies: Vec<JammerStrategy>,
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_modes")]
    pub modes: Vec<CountingMode>,
    #[serde(default = "default_sample")]
    pub message_sample: MessageSample,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fakes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageMode>,
    /// Where the CLI writes the table. Not part of the hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn block_lengths(&self) -> Vec<usize> {
        if self.block_lengths.is_empty() {
            vec![self.channel.n]
        } else {
            self.block_lengths.clone()
        }
    }

    pub fn rates(&self) -> Vec<f64> {
        if self.rates.is_empty() {
            vec![self.code.rate]
        } else {
            self.rates.clone()
        }
    }

    /// Channel of grid point (`n`, `ratio`).
    fn channel_at(&self, n: usize, ratio: Option<f64>) -> Result<ChannelParams> {
        let c = &self.channel;
        let power = ratio.map_or(c.power, |r| r * c.jammer_power);
        ChannelParams::new(n, power, c.jammer_power, c.sigma2)
    }

    /// Grid points as (block-length index, point index, channel, code).
    fn grid(&self) -> Result<Vec<(usize, usize, ChannelParams, CodeParams)>> {
        let mut points = Vec::new();
        for (a, n) in self.block_lengths().into_iter().enumerate() {
            if self.kind == ExperimentKind::PhaseTransition {
                let code = CodeParams::new(n, self.code.rate, self.code.delta0)?;
                for (b, &r) in self.power_ratios.iter().enumerate() {
                    points.push((a, b, self.channel_at(n, Some(r))?, code));
                }
            } else {
                for (b, rate) in self.rates().into_iter().enumerate() {
                    let code = CodeParams::new(n, rate, self.code.delta0)?;
                    points.push((a, b, self.channel_at(n, None)?, code));
                }
            }
        }
        Ok(points)
    }

    fn storage_for(&self, code: &CodeParams) -> StorageMode {
        self.storage.unwrap_or_else(|| auto_storage(code))
    }

    /// Checks the spec and the size of the run it describes.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("experiment name is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("modes is empty".into()));
        }
        let lengths = self.block_lengths();
        if let Some(&n) = lengths.iter().find(|&&n| n > MAX_BLOCK_LENGTH) {
            let bytes = (n as f64 * (self.code.rate + self.code.delta0)).exp() * n as f64 * 8.0;
            return Err(Error::Config(format!(
                "block length {n} exceeds the limit {MAX_BLOCK_LENGTH} (a materialized codebook would take {bytes:.3e} bytes)"
            )));
        }
        match self.kind {
            ExperimentKind::Converse => {
                if !self.strategies.is_empty() {
                    return Err(Error::Config("a converse experiment takes no strategies".into()));
                }
                if !matches!(self.fakes, Some(f) if f > 0) {
                    return Err(Error::Config("a converse experiment needs fakes >= 1".into()));
                }
                if self.channel.power > self.channel.jammer_power {
                    return Err(Error::Constraint(format!(
                        "P<=Lambda: the symmetrizing attack needs P <= Lambda (P={}, Lambda={})",
                        self.channel.power, self.channel.jammer_power
                    )));
                }
            }
            kind => {
                if self.strategies.is_empty() {
                    return Err(Error::Config("strategies is empty".into()));
                }
                if self.fakes.is_some() {
                    return Err(Error::Config("fakes applies to converse experiments only".into()));
                }
                let phase = kind == ExperimentKind::PhaseTransition;
                if phase == self.power_ratios.is_empty() {
                    return Err(Error::Config(
                        "powerRatios is required for a phase transition and not allowed otherwise".into(),
                    ));
                }
                if phase && !self.rates.is_empty() {
                    return Err(Error::Config("a phase transition runs at the single rate code.R".into()));
                }
            }
        }
        let work = self.planned_work()?;
        if work > COMPUTE_BUDGET {
            return Err(Error::Config(format!(
                "experiment needs about {work:.3e} multiply-adds, over the budget of {COMPUTE_BUDGET:.0e}"
            )));
        }
        Ok(())
    }

    /// Rough count of the multiply-adds spent in decoding.
    pub fn planned_work(&self) -> Result<f64> {
        let mut work = 0.0;
        for (_, _, params, code) in self.grid()? {
            let per_trial = match self.storage_for(&code) {
                StorageMode::Ensemble => code.keys_per_row() as f64,
                _ => code.total_codewords(),
            } * params.n as f64;
            let runs = match self.kind {
                ExperimentKind::Converse => self.fakes.unwrap_or(0) as f64,
                _ => {
                    let m = code.messages();
                    let visited = match &self.message_sample {
                        MessageSample::List { messages } => messages.len() as f64,
                        _ if m <= EMAX_ENUMERATION_LIMIT => m as f64,
                        MessageSample::Random { count } => *count as f64,
                        MessageSample::All => m as f64,
                    };
                    let strategies = self.strategies.iter().filter(|s| s.applicable(&params)).count();
                    visited * strategies as f64
                }
            };
            work += runs * self.modes.len() as f64 * self.trials as f64 * per_trial;
        }
        Ok(work)
    }
}

/// SHA-256 of the compact JSON form of `value`, as 16 hex digits.
pub fn json_hash<T: Serialize>(value: &T) -> Result<String> {
    let digest = Sha256::digest(serde_json::to_vec(value)?);
    Ok(hex::encode(&digest[..8]))
}

/// [`json_hash`] of the spec without its output path.
pub fn spec_hash(spec: &ExperimentSpec) -> Result<String> {
    let mut canonical = spec.clone();
    canonical.output = None;
    json_hash(&canonical)
}

/// Codebook seed of grid point (`a`, `b`).
pub fn codebook_seed(seed: u64, a: usize, b: usize) -> u64 {
    derive_seed(seed, Tag::Experiment, &[a as u64, b as u64])
}

/// Trial seed of grid point (`a`, `b`), shared by all strategies and modes.
pub fn trial_seed(seed: u64, a: usize, b: usize) -> u64 {
    derive_seed(seed, Tag::Experiment, &[a as u64, b as u64, 1])
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub name: String,
    pub n: usize,
    pub power: f64,
    pub jammer_power: f64,
    pub sigma2: f64,
    pub rate: f64,
    pub delta0: f64,
    pub strategy: String,
    pub mode: String,
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub spec_hash: String,
}

impl ExperimentRow {
    /// A row for estimate `e` at one channel and code.
    pub fn from_estimate(
        name: String,
        params: &ChannelParams,
        code: &CodeParams,
        strategy: String,
        e: &ErrorEstimate,
        seed: u64,
        spec_hash: String,
    ) -> Self {
        ExperimentRow {
            name,
            n: params.n,
            power: params.power,
            jammer_power: params.jammer_power,
            sigma2: params.sigma2,
            rate: code.rate(),
            delta0: code.delta0(),
            strategy,
            mode: e.mode_label(),
            trials: e.trials,
            errors: e.errors,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            seed,
            spec_hash,
        }
    }

    fn record(&self) -> Vec<String> {
        let f = |x: f64| significant(x, CSV_DIGITS);
        vec![
            self.name.clone(),
            self.n.to_string(),
            f(self.power),
            f(self.jammer_power),
            f(self.sigma2),
            f(self.rate),
            f(self.delta0),
            self.strategy.clone(),
            self.mode.clone(),
            self.trials.to_string(),
            self.errors.to_string(),
            f(self.p_hat),
            f(self.ci_low),
            f(self.ci_high),
            self.seed.to_string(),
            self.spec_hash.clone(),
        ]
    }

    /// The statistic after the `:` in the name column.
    pub fn statistic(&self) -> &str {
        self.name.rsplit_once(':').map_or("", |(_, s)| s)
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// The result of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub spec_hash: String,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }

    /// Rows whose name ends in `:statistic`.
    pub fn with_statistic<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a ExperimentRow> + 'a {
        self.rows.iter().filter(move |r| r.statistic() == statistic)
    }
}

/// Parses a table written by [`ExperimentTable::write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_COLUMNS) {
        return Err(Error::Config(format!(
            "CSV header is {:?}, expected {:?}",
            header.iter().collect::<Vec<_>>(),
            CSV_COLUMNS
        )));
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let line = r + 2;
        let field = |c: usize| record.get(c).unwrap_or("");
        fn parse<T: std::str::FromStr>(s: &str, line: usize, c: usize) -> Result<T> {
            s.parse().map_err(|_| {
                Error::Config(format!("CSV row {line}, column {} ({}): cannot parse {s:?}", c + 1, CSV_COLUMNS[c]))
            })
        }
        rows.push(ExperimentRow {
            name: field(0).into(),
            n: parse(field(1), line, 1)?,
            power: parse(field(2), line, 2)?,
            jammer_power: parse(field(3), line, 3)?,
            sigma2: parse(field(4), line, 4)?,
            rate: parse(field(5), line, 5)?,
            delta0: parse(field(6), line, 6)?,
            strategy: field(7).into(),
            mode: field(8).into(),
            trials: parse(field(9), line, 9)?,
            errors: parse(field(10), line, 10)?,
            p_hat: parse(field(11), line, 11)?,
            ci_low: parse(field(12), line, 12)?,
            ci_high: parse(field(13), line, 13)?,
            seed: parse(field(14), line, 14)?,
            spec_hash: field(15).into(),
        });
    }
    Ok(rows)
}

struct RowContext<'a> {
    spec: &'a ExperimentSpec,
    hash: &'a str,
    params: ChannelParams,
    code: CodeParams,
}

impl RowContext<'_> {
    fn row(&self, statistic: &str, strategy: String, e: &ErrorEstimate) -> ExperimentRow {
        ExperimentRow::from_estimate(
            format!("{}:{statistic}", self.spec.name),
            &self.params,
            &self.code,
            strategy,
            e,
            self.spec.seed,
            self.hash.into(),
        )
    }
}

/// Runs an experiment of any kind.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentTable> {
    spec.validate()?;
    let hash = spec_hash(spec)?;
    let mut rows = Vec::new();
    for (a, b, params, code) in spec.grid()? {
        let cb = build_codebook(codebook_seed(spec.seed, a, b), params, code, spec.storage_for(&code))?;
        let ctx = RowContext {
            spec,
            hash: &hash,
            params,
            code,
        };
        match spec.kind {
            ExperimentKind::Converse => converse_point(&ctx, &cb, a, b, &mut rows)?,
            ExperimentKind::Achievability => {
                emax_point(&ctx, &cb, trial_seed(spec.seed, a, b), &mut rows)?;
            }
            ExperimentKind::PhaseTransition => {
                let first = rows.len();
                emax_point(&ctx, &cb, trial_seed(spec.seed, a, b), &mut rows)?;
                let point = rows[first..].to_vec();
                for mode in &spec.modes {
                    let label = mode_label(*mode, cb.mode());
                    let best = point
                        .iter()
                        .filter(|r| r.mode == label)
                        .fold(None::<&ExperimentRow>, |best, r| match best {
                            Some(b) if b.errors >= r.errors => best,
                            _ => Some(r),
                        });
                    if let Some(best) = best {
                        let mut row = best.clone();
                        row.name = format!("{}:best", spec.name);
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(ExperimentTable { spec_hash: hash, rows })
}

fn mode_label(mode: CountingMode, storage: StorageMode) -> String {
    ErrorEstimate::from_counts(0, 1, mode, storage == StorageMode::Ensemble, 0).mode_label()
}

fn emax_point(ctx: &RowContext, cb: &Codebook, seed: u64, rows: &mut Vec<ExperimentRow>) -> Result<()> {
    for strategy in ctx.spec.strategies.iter().filter(|s| s.applicable(&ctx.params)) {
        for &mode in &ctx.spec.modes {
            let e = estimate_emax(cb, strategy, ctx.spec.trials, &ctx.spec.message_sample, seed, mode)?;
            rows.push(ctx.row("emax", strategy.label(), &e.estimate));
        }
    }
    Ok(())
}

/// Fake messages of a converse grid point, drawn uniformly with replacement.
pub fn converse_fakes(cb: &Codebook, seed: u64, a: usize, b: usize, count: usize) -> Vec<u64> {
    let mut rng = stream(seed, Tag::Experiment, &[a as u64, b as u64, 2]);
    let m = cb.messages().min(u64::MAX as u128) as u64;
    (0..count).map(|_| rng.random_range(1..=m)).collect()
}

fn converse_point(ctx: &RowContext, cb: &Codebook, a: usize, b: usize, rows: &mut Vec<ExperimentRow>) -> Result<()> {
    let spec = ctx.spec;
    let fakes = converse_fakes(cb, spec.seed, a, b, spec.fakes.unwrap_or(0));
    for &mode in &spec.modes {
        let mut per_fake = Vec::with_capacity(fakes.len());
        for (f, &fake) in fakes.iter().enumerate() {
            let seed = derive_seed(spec.seed, Tag::Experiment, &[a as u64, b as u64, 3, f as u64]);
            let strategy = JammerStrategy::Symmetrize { fake: Some(fake) };
            let e = estimate_average(cb, &strategy, spec.trials, seed, mode)?;
            rows.push(ctx.row("fake", strategy.label(), &e));
            per_fake.push((strategy, e));
        }
        let errors = per_fake.iter().map(|(_, e)| e.errors).sum();
        let trials = per_fake.iter().map(|(_, e)| e.trials).sum();
        let pooled = ErrorEstimate::from_counts(errors, trials, mode, cb.mode() == StorageMode::Ensemble, spec.seed);
        rows.push(ctx.row("average", JammerStrategy::Symmetrize { fake: None }.label(), &pooled));
        let (strategy, worst) = per_fake
            .iter()
            .fold(None::<&(JammerStrategy, ErrorEstimate)>, |best, item| match best {
                Some(b) if b.1.errors >= item.1.errors => best,
                _ => Some(item),
            })
            .expect("at least one fake");
        rows.push(ctx.row("max", strategy.label(), worst));
    }
    Ok(())
}
