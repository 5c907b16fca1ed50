use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown fixture '{0}'")]
    MissingFixture(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty group {0}")]
    EmptyGroup(String),

    #[error(transparent)]
    Core(#[from] siren_core::Error),

    #[error(transparent)]
    Planning(#[from] siren_planning::PlanningError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlRead(#[from] toml::de::Error),

    #[error(transparent)]
    TomlWrite(#[from] toml::ser::Error),
}

impl ExperimentError {
    /// Stable identifier printed by the CLI on failure.
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidConfig(_) => "invalid_config",
            Self::MissingFixture(_) => "missing_fixture",
            Self::InsufficientData(_) => "insufficient_data",
            Self::EmptyGroup(_) => "empty_group",
            Self::Core(_) => "core",
            Self::Planning(_) => "planning",
            Self::Io(_) => "io",
            Self::Json(_) => "json",
            Self::TomlRead(_) | Self::TomlWrite(_) => "toml",
        }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
