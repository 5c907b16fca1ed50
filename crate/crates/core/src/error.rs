use thiserror::Error;

/// Errors raised by the core map and probability operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfBounds { x: f64, y: f64 },

    #[error("grid of {width}x{height} cells is too small (need at least 3x3)")]
    DegenerateGrid { width: usize, height: usize },

    #[error("grid geometries differ")]
    GeometryMismatch,

    #[error("malformed layer file: {0}")]
    MalformedFile(String),

    #[error("checksum mismatch: sidecar says {expected}, blob hashes to {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("covariance is not symmetric positive definite: {0}")]
    InvalidCovariance(String),

    #[error("propagated belief is degenerate (singular covariance)")]
    DegenerateBelief,

    #[error("Gauss bound domain violated on axes {axes:?}")]
    BoundDomainViolation { axes: Vec<usize> },

    #[error("value {value} outside the domain of {what}")]
    DomainError { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
