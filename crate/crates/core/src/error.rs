use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interval domain violation: {0}")]
    Domain(String),

    #[error("derivative is not invertible at {at} (|det| = {det:e})")]
    NonInvertible { at: String, det: f64 },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point {0} is not covered by the certificate")]
    NotCovered(String),

    #[error("splitting residual {residual:e} exceeds tolerance {tolerance:e}")]
    SplittingResidual { residual: f64, tolerance: f64 },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("certificate invariant violated: {0}")]
    Invariant(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
