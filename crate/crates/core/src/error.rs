use thiserror::Error;

/// Errors raised by the analytic, simulation and optimization layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numerical failure in {routine}: {detail}")]
    NumericalFailure { routine: &'static str, detail: String },

    #[error("singular system in {routine}: {detail}")]
    Singular { routine: &'static str, detail: String },

    #[error("simulation: {0}")]
    Simulation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn numerical(routine: &'static str, detail: impl Into<String>) -> Error {
    Error::NumericalFailure {
        routine,
        detail: detail.into(),
    }
}
