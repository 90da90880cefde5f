use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants map onto the command-line exit codes: [`Error::Input`] is a
/// malformed request, [`Error::Certificate`] means the requested certificate
/// does not hold, and the remaining variants are resource limits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("group enumeration exceeded the cap of {cap} elements")]
    CapExceeded { cap: usize },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn certificate(msg: impl Into<String>) -> Self {
        Error::Certificate(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
