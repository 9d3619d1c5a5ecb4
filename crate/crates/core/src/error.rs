use thiserror::Error;

/// Errors raised by the simulation and learning stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration value violates a module invariant.
    #[error("configuration error: {key}: {message}")]
    Config { key: String, message: String },
    /// An operation was called in a state where it is not allowed.
    #[error("usage error: {0}")]
    Usage(String),
    /// A serialized blob could not be decoded.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
