use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanningError {
    #[error("no path found after {iterations} iterations")]
    NoPathFound { iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Core(#[from] siren_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PlanningError>;
