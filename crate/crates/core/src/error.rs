use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A required key is missing, an unknown key is present, or a value has the wrong type.
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("validation error: {0}")]
    Validation(String),
    /// Too few samples for the requested operation.
    #[error("size error: {0}")]
    Size(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical blow-up: {0}")]
    NumericalBlowup(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
