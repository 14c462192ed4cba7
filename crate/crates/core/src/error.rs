use thiserror::Error;

/// Errors produced by the newsvendor library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An operation was invoked in the wrong state (stepping past `done`, sampling an empty buffer).
    #[error("usage error: {0}")]
    Usage(String),
    /// A computation produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A configuration document failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
