use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Model;
use crate::objectives::ObjectiveSpec;
use crate::optimizer::AdamEsConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Es,
    Adames,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Es => "es",
            Algorithm::Adames => "adames",
        }
    }
}

fn default_epochs() -> usize {
    1
}

/// Everything a training run depends on. A run is a deterministic function
/// of this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub objective: ObjectiveSpec,
    pub algorithm: Algorithm,
    /// Shared hyperparameters. The betas and fuzz are ignored by plain ES.
    pub optimizer: AdamEsConfig,
    pub model: Model,
    pub iterations: usize,
    pub seed: u64,
    /// Initial mean is drawn uniformly from `[-init_range, init_range]^d`.
    pub init_range: f64,
    /// Run directory; `None` keeps the run in memory.
    #[serde(default)]
    pub log_dir: Option<PathBuf>,
    #[serde(default = "default_epochs")]
    pub actor_epochs: usize,
}

impl AgentConfig {
    /// Static benchmark with the default hyperparameters
    /// (n = 10, sigma = 1, alpha = 0.1, beta1 = 0.9, beta2 = 0.999).
    pub fn benchmark(objective: ObjectiveSpec, algorithm: Algorithm, iterations: usize, seed: u64) -> Self {
        let dim = objective.dimension;
        Self {
            objective,
            algorithm,
            optimizer: AdamEsConfig::default(),
            model: Model::Dummy { dim },
            iterations,
            seed,
            init_range: 5.0,
            log_dir: None,
            actor_epochs: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.check_model(&self.model)?;
        self.optimizer.validate()?;
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.actor_epochs == 0 {
            return Err(Error::invalid("actor_epochs must be at least 1"));
        }
        if !(self.init_range.is_finite() && self.init_range >= 0.0) {
            return Err(Error::invalid(format!(
                "init_range must be finite and nonnegative, got {}",
                self.init_range
            )));
        }
        Ok(())
    }
}
