use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the harness. Every variant is fatal for the
/// current command.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] lyapgdm_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}: {message}")]
    Csv { path: PathBuf, row: usize, message: String },
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Config-key errors are reported through the core variant so callers
    /// can match on the offending key.
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Core(lyapgdm_core::Error::config(key, message))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
