use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("meridian coefficient defined for crossing tubes only (tube {0})")]
    NotCrossing(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("unreachable: no path from {0} to {1}")]
    Unreachable(String, String),
    #[error("no block {0}")]
    NoBlock(usize),
    #[error("no tube to wind at level {0}")]
    NoTubeToWind(usize),
    #[error("horizon too short for trend classification (need ≥ {needed}, got {got})")]
    HorizonTooShort { needed: usize, got: usize },
    #[error("invalid ray: {0}")]
    InvalidRay(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad input rather than a runtime failure.
    pub fn is_invalid_input(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Unreachable(..))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
