//! Run configuration shared by the command-line subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complexity::ComplexityJobConfig;
use crate::discovery::ModelSpace;
use crate::error::{Error, Result};
use crate::estimator::FitConfig;
use crate::evalharness::BenchmarkConfig;
use crate::model::{GenerativePrior, LuckinessSpec, ModelPrior, Scenario};

fn default_prior() -> GenerativePrior {
    GenerativePrior::standard(Scenario::Default { edge_prob: 0.3 })
}

fn default_luckiness() -> LuckinessSpec {
    LuckinessSpec::Uniform
}

fn default_samples() -> usize {
    200
}

fn default_trials() -> usize {
    20
}

/// Strict JSON configuration; unknown keys are rejected. `dim` and `horizon`
/// may come from the command line or from the input data instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_prior")]
    pub generative_prior: GenerativePrior,
    #[serde(default)]
    pub model_prior: ModelPrior,
    #[serde(default = "default_luckiness")]
    pub luckiness: LuckinessSpec,
    #[serde(default)]
    pub model_space: ModelSpace,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// SHA-256 hex digest of the canonical JSON encoding.
pub fn digest_hex<T: Serialize>(value: &T) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(value).expect("serializable")))
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Input {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::from_json(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Digest of the effective configuration, after command-line overrides.
    pub fn digest(&self) -> String {
        digest_hex(self)
    }

    pub fn require_dim(&self) -> Result<usize> {
        self.dim.ok_or_else(|| Error::InvalidConfig("dim is required (config key or --dim)".into()))
    }

    pub fn require_horizon(&self) -> Result<f64> {
        self.horizon
            .ok_or_else(|| Error::InvalidConfig("horizon is required (config key or --horizon)".into()))
    }

    pub fn job_config(&self) -> Result<ComplexityJobConfig> {
        let cfg = ComplexityJobConfig {
            dim: self.require_dim()?,
            horizon: self.require_horizon()?,
            prior: self.generative_prior.clone(),
            luckiness: self.luckiness,
            model_prior_id: self.model_prior.id(),
            n_samples: self.n_samples,
            master_seed: self.seed,
            fit: self.fit,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn benchmark_config(&self) -> Result<BenchmarkConfig> {
        let cfg = BenchmarkConfig {
            dim: self.require_dim()?,
            horizon: self.require_horizon()?,
            prior: self.generative_prior.clone(),
            n_trials: self.n_trials,
            n_samples: self.n_samples,
            master_seed: self.seed,
            space: self.model_space,
            luckiness: self.luckiness,
            model_prior: self.model_prior.clone(),
            fit: self.fit,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
