//! The run-configuration file tying every stage together.
//!
//! One JSON document with sections `sim`, `model`, `train`, `noise` and
//! `eval`. Every field is optional and falls back to the documented
//! default; unknown keys are rejected so typos fail loudly. The fully
//! resolved document (defaults applied) is what gets embedded in
//! checkpoints and dataset sidecars for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalbench::SweepSpec;
use crate::model::SwarmNetConfig;
use crate::rollout::NoiseConfig;
use crate::swarmgen::SimConfig;
use crate::trainer::TrainRunConfig;

/// Evaluation defaults: which horizons reports cover, and the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub horizons: Vec<usize>,
    pub sweep: SweepSpec,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            horizons: vec![5, 40],
            sweep: SweepSpec::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::InvalidParameter(
                "eval horizons must be non-empty and positive".into(),
            ));
        }
        self.sweep.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub sim: SimConfig,
    pub model: SwarmNetConfig,
    pub train: TrainRunConfig,
    pub noise: NoiseConfig,
    pub eval: EvalConfig,
}

impl RunConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The fully resolved document, defaults applied.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.noise.validate()?;
        self.eval.validate()?;
        if self.model.context_dim != self.sim.context_dim() {
            return Err(Error::Config(format!(
                "model expects {} context channels but the simulator emits {}",
                self.model.context_dim,
                self.sim.context_dim()
            )));
        }
        Ok(())
    }
}
