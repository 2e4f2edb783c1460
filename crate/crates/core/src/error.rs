use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied arguments that violate an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input data did not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A numerical routine failed (singular system, no optimizer convergence, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A p-feature was requested from a source that is not causally upstream.
    #[error("causality violation: {target} cannot be forecast from {source_feature}")]
    Causality {
        target: &'static str,
        source_feature: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
