//! Jamming strategies.
//!
//! A jammer knows the codebook and the transmitted message but neither the
//! encoder's key nor the noise. The API enforces this: a strategy is first
//! [prepared](JammerStrategy::prepare) for a message, and the prepared jammer
//! emits state sequences from the codebook and its own random stream only.
//! Every emission satisfies the peak constraint `‖s‖² ≤ nΛ`.

mod net;
mod search;

use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::{sample_sphere, Codebook};
use crate::decoder::CountingMode;
use crate::error::{Error, Result};
use crate::model::{check_power, dot, ensure_len, ChannelParams, RealVector};
use crate::rng::{derive_seed, wide, Tag};

pub use net::{build_net, EpsilonNet};
pub use search::{
    attack_search, attack_search_joint, hill_climb, random_candidates, SearchOutcome,
};

/// Where a candidate search draws its candidate states from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CandidateSource {
    /// A Euclidean ε-net of the jammer ball (small `n` only).
    Net,
    /// Random states on the jammer sphere.
    Random,
}

fn default_source() -> CandidateSource {
    CandidateSource::Random
}
fn default_count() -> usize {
    16
}
fn default_search_trials() -> u64 {
    200
}
fn default_max_points() -> usize {
    100_000
}

/// A jamming strategy, as written in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "StrategyRepr", into = "StrategyRepr")]
pub enum JammerStrategy {
    /// `s = 0`.
    Zero,
    /// i.i.d. `N(0, Λ)` symbols, rescaled onto the sphere when over budget.
    GaussianIid,
    /// Uniform on the sphere of radius `√(nΛ)`.
    SphereUniform,
    /// Transmit a codeword of message `fake` with a jammer-chosen key, or of
    /// a uniformly drawn message when `fake` is absent. Requires `P ≤ Λ`.
    Symmetrize { fake: Option<u64> },
    /// Full power, opposite the centroid of the message's row.
    RowMeanAligned,
    /// A fixed state, given inline or read from a JSON array file.
    FixedVector {
        values: Option<RealVector>,
        path: Option<PathBuf>,
    },
    /// Per-message worst case found by Monte Carlo search over candidates,
    /// optionally refined by coordinate hill climbing.
    CandidateSearch {
        source: CandidateSource,
        /// Net covering radius, and hill-climbing step.
        epsilon: f64,
        /// Number of random candidates.
        count: usize,
        trials_per_candidate: u64,
        /// Hill-climbing sweeps over all coordinates.
        sweeps: usize,
        max_points: usize,
    },
}

// Wire form. Unit variants are written as empty structs so that stray
// fields next to a bare "kind" are rejected too.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
enum StrategyRepr {
    Zero {},
    #[serde(rename = "gaussianIID")]
    GaussianIid {},
    SphereUniform {},
    Symmetrize {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fake: Option<u64>,
    },
    RowMeanAligned {},
    FixedVector {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<RealVector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
    #[serde(rename_all = "camelCase")]
    CandidateSearch {
        #[serde(default = "default_source")]
        source: CandidateSource,
        epsilon: f64,
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_search_trials")]
        trials_per_candidate: u64,
        #[serde(default)]
        sweeps: usize,
        #[serde(default = "default_max_points")]
        max_points: usize,
    },
}

impl From<StrategyRepr> for JammerStrategy {
    fn from(r: StrategyRepr) -> Self {
        match r {
            StrategyRepr::Zero {} => Self::Zero,
            StrategyRepr::GaussianIid {} => Self::GaussianIid,
            StrategyRepr::SphereUniform {} => Self::SphereUniform,
            StrategyRepr::Symmetrize { fake } => Self::Symmetrize { fake },
            StrategyRepr::RowMeanAligned {} => Self::RowMeanAligned,
            StrategyRepr::FixedVector { values, path } => Self::FixedVector { values, path },
            StrategyRepr::CandidateSearch {
                source,
                epsilon,
                count,
                trials_per_candidate,
                sweeps,
                max_points,
            } => Self::CandidateSearch {
                source,
                epsilon,
                count,
                trials_per_candidate,
                sweeps,
                max_points,
            },
        }
    }
}

impl From<JammerStrategy> for StrategyRepr {
    fn from(s: JammerStrategy) -> Self {
        match s {
            JammerStrategy::Zero => Self::Zero {},
            JammerStrategy::GaussianIid => Self::GaussianIid {},
            JammerStrategy::SphereUniform => Self::SphereUniform {},
            JammerStrategy::Symmetrize { fake } => Self::Symmetrize { fake },
            JammerStrategy::RowMeanAligned => Self::RowMeanAligned {},
            JammerStrategy::FixedVector { values, path } => Self::FixedVector { values, path },
            JammerStrategy::CandidateSearch {
                source,
                epsilon,
                count,
                trials_per_candidate,
                sweeps,
                max_points,
            } => Self::CandidateSearch {
                source,
                epsilon,
                count,
                trials_per_candidate,
                sweeps,
                max_points,
            },
        }
    }
}

impl JammerStrategy {
    pub fn fixed(values: RealVector) -> Self {
        JammerStrategy::FixedVector {
            values: Some(values),
            path: None,
        }
    }

    /// A short stable label for tables.
    pub fn label(&self) -> String {
        match self {
            JammerStrategy::Zero => "zero".into(),
            JammerStrategy::GaussianIid => "gaussianIID".into(),
            JammerStrategy::SphereUniform => "sphereUniform".into(),
            JammerStrategy::Symmetrize { fake: Some(j) } => format!("symmetrize(fake={j})"),
            JammerStrategy::Symmetrize { fake: None } => "symmetrize(fake=uniform)".into(),
            JammerStrategy::RowMeanAligned => "rowMeanAligned".into(),
            JammerStrategy::FixedVector { .. } => "fixedVector".into(),
            JammerStrategy::CandidateSearch { source, epsilon, .. } => {
                let src = match source {
                    CandidateSource::Net => "net",
                    CandidateSource::Random => "random",
                };
                format!("candidateSearch({src},eps={epsilon})")
            }
        }
    }

    /// Whether the strategy can be used on a channel (the symmetrizing
    /// attack needs `P ≤ Λ`).
    pub fn applicable(&self, params: &ChannelParams) -> bool {
        !matches!(self, JammerStrategy::Symmetrize { .. }) || params.power <= params.jammer_power
    }

    /// Reads a `fixedVector` file reference into inline values.
    pub fn load(self) -> Result<Self> {
        match self {
            JammerStrategy::FixedVector {
                values: None,
                path: Some(path),
            } => {
                let values: RealVector = serde_json::from_reader(std::fs::File::open(&path)?)?;
                Ok(JammerStrategy::fixed(values))
            }
            other => Ok(other),
        }
    }

    /// Binds the strategy to message `i`. Message-dependent precomputation
    /// (row centroid, candidate search) happens here; `seed` drives the
    /// search only.
    pub fn prepare(&self, cb: &Codebook, i: u128, seed: u64) -> Result<PreparedJammer> {
        cb.check_message(i)?;
        let params = cb.params();
        let prepared = match self {
            JammerStrategy::Zero => Prepared::Zero,
            JammerStrategy::GaussianIid => Prepared::Gaussian,
            JammerStrategy::SphereUniform => Prepared::Sphere,
            JammerStrategy::Symmetrize { fake } => {
                check_symmetrizable(params)?;
                if let Some(j) = *fake {
                    cb.check_message(j as u128)?;
                }
                Prepared::Symmetrize(fake.map(u128::from))
            }
            JammerStrategy::RowMeanAligned => Prepared::Fixed(jam_row_mean(cb, i)?),
            JammerStrategy::FixedVector { values, path } => {
                let v = match (values, path) {
                    (Some(v), _) => v.clone(),
                    (None, Some(_)) => match self.clone().load()? {
                        JammerStrategy::FixedVector { values: Some(v), .. } => v,
                        _ => unreachable!(),
                    },
                    (None, None) => {
                        return Err(Error::Config("fixedVector needs values or path".into()))
                    }
                };
                ensure_len(cb.n(), v.len())?;
                if !check_power(&v, params.jammer_power) {
                    return Err(Error::Constraint(format!(
                        "fixed state has energy {} over the jammer budget {}",
                        v.norm_sq(),
                        params.jammer_energy()
                    )));
                }
                Prepared::Fixed(v)
            }
            JammerStrategy::CandidateSearch {
                source,
                epsilon,
                count,
                trials_per_candidate,
                sweeps,
                max_points,
            } => {
                let [lo, hi] = wide(i);
                let search_seed = derive_seed(seed, Tag::Search, &[lo, hi]);
                let candidates = match source {
                    CandidateSource::Net => build_net(params, *epsilon, *max_points)?.points,
                    CandidateSource::Random => random_candidates(params, *count, search_seed),
                };
                let found = attack_search(
                    cb,
                    i,
                    &candidates,
                    *trials_per_candidate,
                    search_seed,
                    CountingMode::Operational,
                )?;
                let best = if *sweeps > 0 {
                    hill_climb(
                        cb,
                        i,
                        found.state,
                        *epsilon,
                        *sweeps,
                        *trials_per_candidate,
                        search_seed,
                        CountingMode::Operational,
                    )?
                    .state
                } else {
                    found.state
                };
                Prepared::Fixed(best)
            }
        };
        Ok(PreparedJammer { prepared })
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Zero,
    Gaussian,
    Sphere,
    Symmetrize(Option<u128>),
    Fixed(RealVector),
}

/// A strategy bound to one message. Emission sees the codebook and the
/// jammer's own random stream, never the key or the noise.
#[derive(Debug, Clone)]
pub struct PreparedJammer {
    prepared: Prepared,
}

impl PreparedJammer {
    pub fn emit<R: Rng + ?Sized>(&self, cb: &Codebook, rng: &mut R) -> Result<RealVector> {
        let params = cb.params();
        let s = match &self.prepared {
            Prepared::Zero => RealVector::zeros(cb.n()),
            Prepared::Gaussian => jam_gaussian(rng, params),
            Prepared::Sphere => jam_sphere(rng, params),
            Prepared::Symmetrize(fake) => {
                let j = match fake {
                    Some(j) => *j,
                    None => rng.random_range(1..=cb.messages()),
                };
                jam_symmetrize(cb, j, rng)?
            }
            Prepared::Fixed(v) => v.clone(),
        };
        Ok(enforce_budget(s, params.jammer_power))
    }
}

/// Projects `s` onto the jammer ball when it violates the peak constraint.
pub fn enforce_budget(s: RealVector, jammer_power: f64) -> RealVector {
    if check_power(&s, jammer_power) {
        s
    } else {
        let target = (s.len() as f64 * jammer_power).sqrt();
        let norm = s.norm();
        s.scaled(target / norm)
    }
}

fn check_symmetrizable(params: &ChannelParams) -> Result<()> {
    if params.power > params.jammer_power {
        return Err(Error::Constraint(format!(
            "P<=Lambda required by the symmetrizing jammer (P={}, Lambda={})",
            params.power, params.jammer_power
        )));
    }
    Ok(())
}

/// i.i.d. `N(0, Λ)` state, rescaled to norm `√(nΛ)` when `‖s‖² > nΛ`.
pub fn jam_gaussian<R: Rng + ?Sized>(rng: &mut R, params: &ChannelParams) -> RealVector {
    let n = params.n;
    if params.jammer_power == 0.0 {
        return RealVector::zeros(n);
    }
    let sd = params.jammer_power.sqrt();
    let s: RealVector = (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect::<Vec<_>>()
        .into();
    let budget = params.jammer_energy();
    let e = s.norm_sq();
    if e > budget {
        s.scaled((budget / e).sqrt())
    } else {
        s
    }
}

/// Uniform on the jammer sphere.
pub fn jam_sphere<R: Rng + ?Sized>(rng: &mut R, params: &ChannelParams) -> RealVector {
    if params.jammer_power == 0.0 {
        return RealVector::zeros(params.n);
    }
    sample_sphere(rng, params.n, params.jammer_energy().sqrt())
}

/// The symmetrizing attack: codeword `x(fake, t'')` of the public codebook
/// with a key `t''` drawn from the jammer's stream, independent of the
/// encoder's key.
pub fn jam_symmetrize<R: Rng + ?Sized>(cb: &Codebook, fake: u128, rng: &mut R) -> Result<RealVector> {
    check_symmetrizable(cb.params())?;
    cb.check_message(fake)?;
    let key = rng.random_range(1..=cb.keys_per_row());
    Ok(cb.codeword_unchecked(fake, key))
}

/// Full-power state opposite the centroid of row `i`.
pub fn jam_row_mean(cb: &Codebook, i: u128) -> Result<RealVector> {
    let row = cb.row(i)?;
    let n = cb.n();
    let mut mean = vec![0.0; n];
    for w in &row {
        for (m, x) in mean.iter_mut().zip(w.iter()) {
            *m += x;
        }
    }
    let k = row.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    let norm = dot(&mean, &mean).sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate(format!("row {i} has a zero centroid")));
    }
    let c = -cb.params().jammer_energy().sqrt() / norm;
    Ok(mean.into_iter().map(|m| c * m).collect::<Vec<_>>().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{build_codebook, StorageMode};
    use crate::model::CodeParams;
    use crate::rng::stream;

    fn cb(n: usize, p: f64, lambda: f64, rate: f64, delta0: f64) -> Codebook {
        build_codebook(
            21,
            ChannelParams::new(n, p, lambda, 0.1).unwrap(),
            CodeParams::new(n, rate, delta0).unwrap(),
            StorageMode::Materialized,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_jammer_zero_power() {
        let p = ChannelParams::new(8, 1.0, 0.0, 1.0).unwrap();
        let mut rng = stream(1, Tag::TrialJammer, &[]);
        assert_eq!(jam_gaussian(&mut rng, &p), RealVector::zeros(8));
    }

    #[test]
    fn gaussian_jammer_energy_band() {
        // Pre-rescale ‖s‖²/n concentrates in [0.94, 1.06] at n = 10^4.
        let n = 10_000;
        let mut rng = stream(2, Tag::TrialJammer, &[]);
        let sd = 1.0;
        for _ in 0..20 {
            let raw: f64 = (0..n)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    (sd * z).powi(2)
                })
                .sum::<f64>()
                / n as f64;
            assert!((0.94..=1.06).contains(&raw), "{raw}");
        }
        let p = ChannelParams::new(n, 1.0, 1.0, 1.0).unwrap();
        let s = jam_gaussian(&mut rng, &p);
        assert!(check_power(&s, 1.0));
        assert!(s.norm_sq() / n as f64 > 0.94);
    }

    #[test]
    fn symmetrize_requires_weak_transmitter() {
        let c = cb(8, 2.0, 1.0, 0.2, 0.1);
        let mut rng = stream(3, Tag::TrialJammer, &[]);
        assert!(matches!(jam_symmetrize(&c, 1, &mut rng), Err(Error::Constraint(_))));
        let strat = JammerStrategy::Symmetrize { fake: Some(1) };
        assert!(strat.prepare(&c, 1, 0).is_err());
        assert!(!strat.applicable(c.params()));
    }

    #[test]
    fn symmetrize_at_equal_power_uses_full_budget() {
        let c = cb(8, 1.0, 1.0, 0.2, 0.2);
        let mut rng = stream(4, Tag::TrialJammer, &[]);
        let s = jam_symmetrize(&c, 2, &mut rng).unwrap();
        assert!((s.norm_sq() - 8.0).abs() < 1e-9 * 8.0);
        assert!(check_power(&s, 1.0));
        let row = c.row(2).unwrap();
        assert!(row.contains(&s));
    }

    #[test]
    fn symmetrize_keys_vary() {
        let c = cb(8, 1.0, 1.0, 0.2, 0.2);
        assert_eq!(c.keys_per_row(), 5);
        let mut rng = stream(5, Tag::TrialJammer, &[]);
        let draws: Vec<_> = (0..200).map(|_| jam_symmetrize(&c, 1, &mut rng).unwrap()).collect();
        let distinct = draws.windows(2).filter(|w| w[0] != w[1]).count();
        // Consecutive draws differ with probability 1 - 1/5.
        assert!((140..=180).contains(&distinct), "{distinct}");
    }

    #[test]
    fn row_mean_single_key_anti_aligned() {
        let c = build_codebook(
            3,
            ChannelParams::new(16, 1.0, 1.0, 0.0).unwrap(),
            CodeParams::new(16, 0.1, 0.0).unwrap(),
            StorageMode::Materialized,
        )
        .unwrap();
        assert_eq!(c.keys_per_row(), 1);
        let s = jam_row_mean(&c, 2).unwrap();
        let x = c.codeword(2, 1).unwrap();
        assert!((s.norm_sq() - 16.0).abs() < 1e-9 * 16.0);
        let received: f64 = x.iter().zip(s.iter()).map(|(a, b)| (a + b).powi(2)).sum();
        assert!(received < 1e-20, "{received}");
        for (a, b) in s.iter().zip(x.iter()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn row_mean_multi_key_full_power() {
        let c = cb(8, 2.0, 0.5, 0.2, 0.2);
        let s = jam_row_mean(&c, 1).unwrap();
        assert!((s.norm_sq() - 4.0).abs() < 1e-9 * 4.0);
    }

    #[test]
    fn every_strategy_respects_the_budget() {
        for (p, lambda) in [(1.0, 1.0), (0.8, 1.0), (4.0, 1.0), (1.0, 0.3)] {
            let c = cb(6, p, lambda, 0.3, 0.2);
            let params = *c.params();
            let mut strategies = vec![
                JammerStrategy::Zero,
                JammerStrategy::GaussianIid,
                JammerStrategy::SphereUniform,
                JammerStrategy::RowMeanAligned,
                JammerStrategy::fixed(vec![0.1; 6].into()),
            ];
            if p <= lambda {
                strategies.push(JammerStrategy::Symmetrize { fake: None });
                strategies.push(JammerStrategy::Symmetrize { fake: Some(2) });
            }
            for strat in strategies {
                let prepared = strat.prepare(&c, 1, 0).unwrap();
                let mut rng = stream(6, Tag::TrialJammer, &[]);
                for _ in 0..1000 {
                    let s = prepared.emit(&c, &mut rng).unwrap();
                    assert!(check_power(&s, params.jammer_power), "{}", strat.label());
                }
            }
        }
    }

    #[test]
    fn fixed_vector_checks() {
        let c = cb(4, 1.0, 1.0, 0.2, 0.2);
        let too_big = JammerStrategy::fixed(vec![2.0, 2.0, 0.0, 0.0].into());
        assert!(matches!(too_big.prepare(&c, 1, 0), Err(Error::Constraint(_))));
        let wrong_len = JammerStrategy::fixed(vec![0.0; 3].into());
        assert!(matches!(wrong_len.prepare(&c, 1, 0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn fixed_vector_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, "[0.5, -0.5, 0.0, 0.25]").unwrap();
        let strat: JammerStrategy =
            serde_json::from_str(&format!(r#"{{"kind":"fixedVector","path":{:?}}}"#, path)).unwrap();
        let c = cb(4, 1.0, 1.0, 0.2, 0.2);
        let mut rng = stream(0, Tag::TrialJammer, &[]);
        let s = strat.prepare(&c, 1, 0).unwrap().emit(&c, &mut rng).unwrap();
        assert_eq!(*s, [0.5, -0.5, 0.0, 0.25]);
    }

    #[test]
    fn strategy_grammar() {
        let parse = |s: &str| serde_json::from_str::<JammerStrategy>(s).unwrap();
        assert_eq!(parse(r#"{"kind":"gaussianIID"}"#), JammerStrategy::GaussianIid);
        assert_eq!(
            parse(r#"{"kind":"symmetrize","fake":3}"#),
            JammerStrategy::Symmetrize { fake: Some(3) }
        );
        match parse(r#"{"kind":"candidateSearch","source":"net","epsilon":0.5}"#) {
            JammerStrategy::CandidateSearch { source, epsilon, .. } => {
                assert_eq!(source, CandidateSource::Net);
                assert_eq!(epsilon, 0.5);
            }
            other => panic!("{other:?}"),
        }
        assert!(serde_json::from_str::<JammerStrategy>(r#"{"kind":"zero","extra":1}"#).is_err());
        assert!(serde_json::from_str::<JammerStrategy>(r#"{"kind":"laser"}"#).is_err());
        let all = [
            JammerStrategy::Zero,
            JammerStrategy::GaussianIid,
            JammerStrategy::Symmetrize { fake: None },
            JammerStrategy::fixed(vec![0.5, 0.25].into()),
            parse(r#"{"kind":"candidateSearch","epsilon":0.2,"trialsPerCandidate":7}"#),
        ];
        for s in all {
            assert_eq!(parse(&serde_json::to_string(&s).unwrap()), s);
        }
        assert_eq!(serde_json::to_string(&JammerStrategy::Zero).unwrap(), r#"{"kind":"zero"}"#);
    }
}
