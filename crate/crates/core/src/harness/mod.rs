//! Config-driven training runs, λ×η sweeps and the verification suites.

mod config;
mod run;
mod sweep;
mod verify;

pub use config::{OptimizerSpec, ProblemSpec, RunConfig};
pub use run::{run, run_to_dir, LogRow, RunOutcome, RunSummary, LOG_COLUMNS};
pub use sweep::{sweep, sweep_to_dir, Grid, SweepRow, SUMMARY_COLUMNS};
pub use verify::{verify, Check, Suite, VerifyOptions, VerifyReport};

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical abort at step {step}: {source}")]
    Numerical { step: u64, source: Error },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("verification failed: {0}")]
    Verify(String),
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerical { .. } => 1,
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Verify(_) => 3,
        }
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Io(std::io::Error::other(e))
    }
}

/// Shortest round-trip text for a float, with an exponent for very large or
/// small magnitudes.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}
