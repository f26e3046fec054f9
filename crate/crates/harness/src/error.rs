use std::path::PathBuf;

use thiserror::Error;

/// Failures that stop a scenario before a verdict exists. All of them map to
/// exit code 2.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: `{field}`: {message}")]
    Field { path: PathBuf, field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Core(#[from] lsmdual_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn field(path: impl Into<PathBuf>, field: &str, message: impl Into<String>) -> Self {
        HarnessError::Field { path: path.into(), field: field.to_string(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
