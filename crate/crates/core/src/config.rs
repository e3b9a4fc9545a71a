//! Run configuration files.
//!
//! One strict JSON schema serves every command line tool: each command reads
//! the fields it needs and reports the missing ones by name. Unknown fields
//! are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundCheck, DeltaParams};
use crate::codebook::StorageMode;
use crate::decoder::CountingMode;
use crate::error::{Error, Result};
use crate::estimator::MessageSample;
use crate::experiments::CodeSpec;
use crate::jammers::{CandidateSource, JammerStrategy};
use crate::model::ChannelParams;

/// Candidate states of an attack search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AttackSpec {
    pub source: CandidateSource,
    /// Net covering radius, and hill-climbing step.
    pub epsilon: f64,
    /// Number of random candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<DeltaParams>,
    /// Rates of a sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<JammerStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CountingMode>,
    /// A single message; without it `simulate` estimates `e_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_sample: Option<MessageSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSpec>,
    /// Checks for `verify`; empty means the standard suite.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<BoundCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn missing(field: &str) -> Error {
    Error::Config(format!("config field {field:?} is required"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Converts every rate-like exponent (`R`, `delta0`, `rates`) from bits
    /// to nats.
    pub fn rates_from_bits(mut self) -> Self {
        let ln2 = std::f64::consts::LN_2;
        if let Some(code) = &mut self.code {
            code.rate *= ln2;
            code.delta0 *= ln2;
        }
        for r in &mut self.rates {
            *r *= ln2;
        }
        self
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        let c = self.channel.ok_or_else(|| missing("channel"))?;
        c.validate()?;
        Ok(c)
    }

    pub fn code(&self) -> Result<CodeSpec> {
        self.code.ok_or_else(|| missing("code"))
    }

    pub fn deltas(&self) -> Result<DeltaParams> {
        self.deltas.ok_or_else(|| missing("deltas"))
    }

    pub fn strategy(&self) -> Result<JammerStrategy> {
        self.strategy.clone().ok_or_else(|| missing("strategy"))?.load()
    }

    pub fn trials(&self) -> Result<u64> {
        self.trials.ok_or_else(|| missing("trials"))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| missing("seed"))
    }

    pub fn mode(&self) -> CountingMode {
        self.mode.unwrap_or(CountingMode::Operational)
    }

    pub fn message_sample(&self) -> MessageSample {
        self.message_sample.clone().unwrap_or(MessageSample::Random { count: 2 })
    }

    pub fn attack(&self) -> Result<AttackSpec> {
        self.attack.clone().ok_or_else(|| missing("attack"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_and_round_trips() {
        let text = r#"{"channel":{"n":16,"P":4,"Lambda":1,"sigma2":0.5},"code":{"R":0.1,"delta0":0.05},
            "strategy":{"kind":"symmetrize","fake":3},"trials":100,"seed":7,"mode":"predicate"}"#;
        let c = RunConfig::from_json(text).unwrap();
        assert_eq!(c.mode(), CountingMode::Predicate);
        assert_eq!(c.strategy().unwrap(), JammerStrategy::Symmetrize { fake: Some(3) });
        assert_eq!(RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap(), c);
        assert!(RunConfig::from_json(r#"{"seeed":1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"code":{"R":0.1,"delta0":0.05,"x":1}}"#).is_err());
    }

    #[test]
    fn missing_fields_are_named() {
        let err = RunConfig::default().trials().unwrap_err().to_string();
        assert!(err.contains("\"trials\""));
    }

    #[test]
    fn bits_convert_at_the_boundary() {
        let c = RunConfig {
            code: Some(CodeSpec { rate: 1.0, delta0: 0.5 }),
            rates: vec![2.0],
            ..Default::default()
        }
        .rates_from_bits();
        assert_eq!(c.code.unwrap().rate, std::f64::consts::LN_2);
        assert_eq!(c.rates, vec![2.0 * std::f64::consts::LN_2]);
    }
}
