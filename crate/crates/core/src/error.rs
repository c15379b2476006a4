use thiserror::Error;

use crate::tct::ExclusionReason;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration has no particles")]
    EmptyConfiguration,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pair {0} is grazing")]
    Grazing(String),

    #[error("pair {0} has no collision")]
    NoCollision(String),

    #[error("relative speed squared {rel_sq} is within the critical band around 4*epsilon0 = {threshold}")]
    CriticalEnergy { rel_sq: f64, threshold: f64 },

    #[error("velocities are not pre-collisional: (v_j - v_i).omega = {0}")]
    NotPreCollisional(f64),

    #[error("relative velocity vanishes")]
    ZeroRelativeVelocity,

    #[error("radius below emission threshold")]
    BelowThreshold,

    #[error("configuration excluded from the flow domain: {0:?}")]
    ExcludedConfiguration(ExclusionReason),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("finite-difference stencil crosses a branch boundary at coordinate {coordinate}")]
    BranchCrossing { coordinate: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors a caller can fix by changing its input, as opposed to runtime
    /// pathologies of the dynamics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyConfiguration
                | Error::DimensionMismatch { .. }
                | Error::NonFinite(_)
                | Error::InvalidParameter(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
