use std::path::PathBuf;

use tbe_chart::ChartError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const SIGNAL: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    File { path: PathBuf, reason: String },
    #[error(transparent)]
    Chart(#[from] ChartError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Chart(ChartError::Infeasible { .. }) => exit::INFEASIBLE,
            CliError::Chart(e) if e.is_numerical() => exit::NUMERICAL,
            _ => exit::USAGE,
        }
    }

    pub fn in_file(path: &std::path::Path, err: ChartError) -> Self {
        match err {
            ChartError::DataLine { .. } | ChartError::EmptySample | ChartError::NonPositiveObservation { .. } => {
                CliError::File { path: path.to_owned(), reason: err.to_string() }
            }
            other => CliError::Chart(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
