use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("site count mismatch: expected {expected}, got {got}")]
    SiteMismatch { expected: usize, got: usize },
    #[error("configuration variant mismatch: {0}")]
    Variant(String),
    #[error("duality parameter eta = 1 is excluded")]
    EtaOne,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("negative rate in process mode: {0}")]
    NegativeRate(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
