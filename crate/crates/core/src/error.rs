use thiserror::Error;

use crate::optim::{DecayMode, OptimizerKind};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector must have at least one entry")]
    EmptyVector,

    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid clip bounds: lo ({lo}) > hi ({hi})")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("invalid hyperparameter {name} = {value}: {reason}")]
    InvalidHyperParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("decay mode `{mode}` is not defined for optimizer `{kind}`")]
    IncompatibleMode { kind: OptimizerKind, mode: DecayMode },

    #[error("decay overshoot: decay multiplier {multiplier} <= 0 (lambda is mis-scaled for this mode)")]
    DecayOvershoot { multiplier: f64 },

    #[error("step counter overflow")]
    StepOverflow,

    #[error("matrix is not symmetric positive-definite")]
    NotPositiveDefinite,

    #[error("linear system is singular")]
    Singular,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("L2-momentum weight decay rate requires the parameter history")]
    MissingHistory,

    #[error("{0}")]
    InvalidArgument(String),
}
