//! Experiment plumbing behind the `qmag` binary: configuration files, result
//! records, CSV output and the resumable noise sweep.

pub mod config;
pub mod pure;
pub mod record;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error(transparent)]
    Core(#[from] qmag::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for optimizer disagreement, 3 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonConvergence(_) | CliError::Core(qmag::Error::NonConvergence { .. }) => 2,
            _ => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
