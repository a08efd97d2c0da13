use thiserror::Error;

/// Errors raised by the fitting, selection and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// The problem instance violates one of its invariants.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A design column has zero Euclidean length and cannot be normalized.
    #[error("column {index} has zero length; remove it before fitting")]
    ZeroColumn { index: usize },

    /// A tuning parameter is outside its domain.
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// Two datasets that must share a column layout do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A non-finite value appeared during a numerical routine.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Every inner fit of a homotopy run failed.
    #[error("all {0} inner fits failed")]
    AllIterationsFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input or settings, as opposed to a
    /// numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidData(_)
                | Error::ZeroColumn { .. }
                | Error::InvalidConfig { .. }
                | Error::DimensionMismatch(_)
                | Error::Csv(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
