use thiserror::Error;

/// Errors raised by the verifier core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("no dimension is wider than the minimum split width")]
    NoSplittableDimension,

    #[error("model parse error: {0}")]
    Parse(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("unsupported activation `{0}`")]
    UnsupportedActivation(String),

    #[error("invalid table controller: {0}")]
    InvalidTable(String),

    #[error("region lies outside the controller table domain")]
    OutsideTableDomain,

    #[error("invalid environment model: {0}")]
    InvalidEnv(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
