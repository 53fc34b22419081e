use std::path::PathBuf;

use mfg_core::MfgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("gate failure: {0}")]
    Gate(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Gate(_) => 1,
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

impl From<MfgError> for CliError {
    fn from(e: MfgError) -> Self {
        match e {
            MfgError::Gate(msg) => CliError::Gate(msg),
            MfgError::InvalidGrid(_)
            | MfgError::InvalidParameter(_)
            | MfgError::FieldLength { .. }
            | MfgError::GridMismatch => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
