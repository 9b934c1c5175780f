use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::optim::{make_optimizer, DecayMode, HyperParams, OptimizerKind};
use crate::problems::{
    mlp_problem, Activation, DatasetSpec, LogisticProblem, Problem, QuadraticProblem,
};
use crate::schedule::{ScheduleKind, ScheduleSpec};

fn default_true() -> bool {
    true
}

/// Which objective to train and how to build it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Random SPD quadratic; deterministic, one "sample".
    Quadratic { dim: usize, seed: u64 },
    Logistic {
        dataset: DatasetSpec,
        #[serde(default)]
        intercept: bool,
        #[serde(default = "default_true")]
        standardize: bool,
    },
    Mlp {
        dataset: DatasetSpec,
        /// Widths including input and output, e.g. `[2, 16, 2]`.
        layers: Vec<usize>,
        #[serde(default)]
        activation: Activation,
        #[serde(default = "default_true")]
        standardize: bool,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> crate::error::Result<Box<dyn Problem>> {
        Ok(match self {
            ProblemSpec::Quadratic { dim, seed } => Box::new(QuadraticProblem::random(*dim, *seed)?),
            ProblemSpec::Logistic {
                dataset,
                intercept,
                standardize,
            } => {
                let mut data = dataset.generate()?;
                if *standardize {
                    data = data.standardized();
                }
                Box::new(LogisticProblem::new(data, *intercept)?)
            }
            ProblemSpec::Mlp {
                dataset,
                layers,
                activation,
                standardize,
            } => {
                let mut data = dataset.generate()?;
                if *standardize {
                    data = data.standardized();
                }
                Box::new(mlp_problem(data, layers, *activation)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub mode: DecayMode,
    /// `eta` is the base learning rate fed to the schedule.
    #[serde(default)]
    pub hyper: HyperParams,
}

/// A complete, self-describing training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub schedule: ScheduleKind,
    pub epochs: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_log_every")]
    pub log_every: u64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; the command line may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_batch_size() -> usize {
    128
}

fn default_log_every() -> u64 {
    10
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let config: Self = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Checks everything that can be checked without training.
    pub fn validate(&self) -> Result<(), RunError> {
        let cfg = |e: crate::error::Error| RunError::Config(e.to_string());
        if self.epochs == 0 {
            return Err(RunError::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(RunError::Config("batch_size must be >= 1".into()));
        }
        if self.log_every == 0 {
            return Err(RunError::Config("log_every must be >= 1".into()));
        }
        let o = &self.optimizer;
        make_optimizer(o.kind, 1, o.hyper, o.mode).map_err(cfg)?;
        ScheduleSpec::new(self.schedule.clone(), o.hyper.eta, 1).map_err(cfg)?;
        Ok(())
    }

    pub fn schedule_spec(&self, steps_per_epoch: u64) -> crate::error::Result<ScheduleSpec> {
        ScheduleSpec::new(self.schedule.clone(), self.optimizer.hyper.eta, steps_per_epoch)
    }
}
