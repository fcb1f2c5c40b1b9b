use thiserror::Error;

/// Errors raised across the crate.
///
/// `Invalid` marks a rejected input or violated precondition; everything else
/// is a failure that happened while running a computation on valid input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: invalid input: {msg}")]
    Invalid { module: &'static str, msg: String },

    #[error("{module}: numerical failure: {msg}")]
    Numerical { module: &'static str, msg: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Invalid {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn numerical(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            msg: msg.into(),
        }
    }

    /// True when the error came from rejected input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Invalid { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
