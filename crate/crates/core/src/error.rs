use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular parameter: {0}")]
    Singular(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} did not converge (best estimate {estimate:e}, error estimate {error:e})")]
    NonConvergence {
        what: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("tail bound violated: {0}")]
    TailBound(String),

    #[error("outside range of validity: {0}")]
    OutOfValidity(String),

    #[error("no bound state for these parameters: {0}")]
    NoBoundState(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Singular(_)
                | Error::DimensionMismatch { .. }
                | Error::NoBoundState(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
