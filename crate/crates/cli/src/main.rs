use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avclab::bounds::{
    capacity, capacity_noiseless, standard_suite, verify_bound_empirical, BoundReport, NoiselessCapacity,
};
use avclab::codebook::{auto_storage, build_codebook, Codebook};
use avclab::config::RunConfig;
use avclab::estimator::{estimate_emax, estimate_error, rate_sweep, with_threads, SweepOptions};
use avclab::experiments::{json_hash, run_experiment, ExperimentRow, ExperimentSpec, ExperimentTable};
use avclab::format::significant;
use avclab::jammers::{attack_search, build_net, hill_climb, random_candidates, CandidateSource};
use avclab::model::CodeParams;
use avclab::rng::{derive_seed, Tag};
use avclab::plot::{read_series, render_svg, PlotOptions};
use avclab::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avclab", version, about = "Gaussian AVC simulation, bounds and experiments")]
struct Cli {
    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Read rates (R, delta0, rates) as bits per channel use.
    #[arg(long, global = true)]
    bits: bool,
    /// Write data to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity in nats and bits per channel use.
    Capacity {
        #[arg(long = "P", allow_negative_numbers = true)]
        power: f64,
        #[arg(long = "Lambda", allow_negative_numbers = true)]
        jammer_power: f64,
        #[arg(long, allow_negative_numbers = true)]
        sigma2: f64,
    },
    /// Bound report (JSON) for a channel, rate and delta parameters.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Error estimate for one message, or e_max over a message sample.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// e_max over a list of rates.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Search for the worst fixed state against one message.
    Attack {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo check of the analytic tail bounds.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment spec and write its CSV table.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Line chart (SVG) of CSV columns.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        x: String,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long)]
        log_y: bool,
    },
}

const DEFAULT_SAMPLES: u64 = 1_000_000;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Constraint(_) | Error::Domain(_) => 2,
        Error::Budget { .. } => 3,
        _ => 1,
    }
}

fn emit(out: Option<&Path>, data: &[u8]) -> avclab::Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, data)?;
        }
        None => std::io::stdout().write_all(data)?,
    }
    Ok(())
}

fn load_config(path: &Path, bits: bool) -> avclab::Result<RunConfig> {
    let config = RunConfig::load(path)?;
    Ok(if bits { config.rates_from_bits() } else { config })
}

fn codebook(config: &RunConfig) -> avclab::Result<Codebook> {
    let params = config.channel()?;
    let code = config.code()?;
    let code = CodeParams::new(params.n, code.rate, code.delta0)?;
    let storage = config.storage.unwrap_or_else(|| auto_storage(&code));
    build_codebook(config.seed()?, params, code, storage)
}

/// Hash of a run config, without its output path.
fn config_hash(config: &RunConfig) -> avclab::Result<String> {
    json_hash(&RunConfig {
        output: None,
        ..config.clone()
    })
}

fn table_csv(rows: Vec<ExperimentRow>, hash: String) -> avclab::Result<Vec<u8>> {
    let mut buf = Vec::new();
    ExperimentTable { spec_hash: hash, rows }.write_csv(&mut buf)?;
    Ok(buf)
}

fn run(cli: Cli) -> avclab::Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Capacity {
            power,
            jammer_power,
            sigma2,
        } => {
            let c = if sigma2 == 0.0 {
                match capacity_noiseless(power, jammer_power)? {
                    NoiselessCapacity::Finite(c) => c,
                    NoiselessCapacity::Unbounded => f64::INFINITY,
                }
            } else {
                capacity(power, jammer_power, sigma2)?
            };
            let mut text = format!(
                "C = {} nats/use\nC = {} bits/use\n",
                significant(c, 9),
                significant(c / std::f64::consts::LN_2, 9)
            );
            if power <= jammer_power {
                text.push_str("note: P ≤ Λ: symmetrizable\n");
            }
            emit(out, text.as_bytes())
        }
        Command::Bounds { config } => {
            let config = load_config(&config, cli.bits)?;
            let report = BoundReport::new(&config.channel()?, config.code()?.rate, &config.deltas()?)?;
            let mut json = serde_json::to_vec_pretty(&report.to_json())?;
            json.push(b'\n');
            emit(out, &json)?;
            if report.feasible() {
                return Ok(());
            }
            let names: Vec<_> = report.feasibility_violations.iter().map(|v| v.name).collect();
            for v in &report.feasibility_violations {
                eprintln!("violated: {}: {}", v.name, v.detail);
            }
            Err(Error::Constraint(names.join(", ")))
        }
        Command::Simulate { config } => {
            let config = load_config(&config, cli.bits)?;
            let cb = codebook(&config)?;
            let strategy = config.strategy()?;
            let (trials, seed, mode) = (config.trials()?, config.seed()?, config.mode());
            let (statistic, estimate) = match config.message {
                Some(i) => ("error", estimate_error(&cb, i as u128, &strategy, trials, seed, mode)?),
                None => {
                    let e = estimate_emax(&cb, &strategy, trials, &config.message_sample(), seed, mode)?;
                    if e.sampled {
                        eprintln!("note: e_max over {} sampled messages is a lower bound", e.per_message.len());
                    }
                    ("emax", e.estimate)
                }
            };
            let row = ExperimentRow::from_estimate(
                format!("simulate:{statistic}"),
                cb.params(),
                cb.code(),
                strategy.label(),
                &estimate,
                seed,
                config_hash(&config)?,
            );
            emit(out.or(config.output.as_deref()), &table_csv(vec![row], config_hash(&config)?)?)
        }
        Command::Sweep { config } => {
            let config = load_config(&config, cli.bits)?;
            if config.rates.is_empty() {
                return Err(Error::Config("config field \"rates\" is required".into()));
            }
            let params = config.channel()?;
            let strategy = config.strategy()?;
            let options = SweepOptions {
                delta0: config.code()?.delta0,
                trials: config.trials()?,
                seed: config.seed()?,
                mode: config.mode(),
                sample: config.message_sample(),
                storage: config.storage,
            };
            let hash = config_hash(&config)?;
            let mut rows = Vec::new();
            for row in rate_sweep(&params, &config.rates, &strategy, &options)? {
                let code = CodeParams::new(params.n, row.rate, options.delta0)?;
                match (&row.emax, &row.skipped) {
                    (Some(e), _) => rows.push(ExperimentRow::from_estimate(
                        "sweep:emax".into(),
                        &params,
                        &code,
                        strategy.label(),
                        &e.estimate,
                        options.seed,
                        hash.clone(),
                    )),
                    (None, reason) => eprintln!("skipped R={}: {}", row.rate, reason.as_deref().unwrap_or("")),
                }
            }
            emit(out.or(config.output.as_deref()), &table_csv(rows, hash)?)
        }
        Command::Attack { config } => {
            let config = load_config(&config, cli.bits)?;
            let cb = codebook(&config)?;
            let attack = config.attack()?;
            let i = config.message.ok_or_else(|| Error::Config("config field \"message\" is required".into()))? as u128;
            let (trials, seed, mode) = (config.trials()?, config.seed()?, config.mode());
            let candidates = match attack.source {
                CandidateSource::Net => build_net(cb.params(), attack.epsilon, attack.max_points.unwrap_or(100_000))?.points,
                CandidateSource::Random => random_candidates(cb.params(), attack.count.unwrap_or(16), seed),
            };
            let found = attack_search(&cb, i, &candidates, trials, seed, mode)?;
            let sweeps = attack.sweeps.unwrap_or(0);
            let refined = if sweeps > 0 {
                Some(hill_climb(&cb, i, found.state.clone(), attack.epsilon, sweeps, trials, seed, mode)?)
            } else {
                None
            };
            let report = serde_json::json!({
                "message": i as u64,
                "candidates": candidates.len(),
                "best": found,
                "refined": refined,
            });
            let mut json = serde_json::to_vec_pretty(&report)?;
            json.push(b'\n');
            emit(out.or(config.output.as_deref()), &json)
        }
        Command::Verify { config, samples, seed } => {
            let config = match config {
                Some(path) => load_config(&path, cli.bits)?,
                None => RunConfig::default(),
            };
            let checks = if config.checks.is_empty() {
                standard_suite()
            } else {
                config.checks.clone()
            };
            let samples = samples.or(config.samples).unwrap_or(DEFAULT_SAMPLES);
            let seed = seed.or(config.seed).unwrap_or(0);
            let reports = checks
                .iter()
                .enumerate()
                .map(|(k, &c)| verify_bound_empirical(c, samples, derive_seed(seed, Tag::Verify, &[u64::MAX, k as u64])))
                .collect::<avclab::Result<Vec<_>>>()?;
            let violations = reports.iter().filter(|r| !r.dominated).count();
            eprintln!("{} of {} bounds dominate their 99% upper confidence limit", reports.len() - violations, reports.len());
            let mut json = serde_json::to_vec_pretty(&reports)?;
            json.push(b'\n');
            emit(out.or(config.output.as_deref()), &json)
        }
        Command::Experiment { spec } => {
            let mut spec = ExperimentSpec::from_json(&std::fs::read_to_string(&spec)?)?;
            if cli.bits {
                let ln2 = std::f64::consts::LN_2;
                spec.code.rate *= ln2;
                spec.code.delta0 *= ln2;
                spec.rates.iter_mut().for_each(|r| *r *= ln2);
            }
            let table = run_experiment(&spec)?;
            eprintln!("{}: {} rows, spec hash {}", spec.name, table.rows.len(), table.spec_hash);
            emit(out.or(spec.output.as_deref()), table.to_csv()?.as_bytes())
        }
        Command::Plot { csv, x, y, log_y } => {
            let options = PlotOptions { x, y, log_y };
            let series = read_series(std::fs::File::open(&csv)?, &options)?;
            emit(out, render_svg(&series, &options).as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads;
    let result = with_threads(threads, || run(cli)).and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
