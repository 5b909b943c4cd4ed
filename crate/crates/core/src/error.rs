use thiserror::Error;

/// Failure classes surfaced by the library.
///
/// The CLI maps them onto exit codes: validation 2, consistency 4.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Bad input: out-of-range parameter, malformed matrix, unknown index.
    #[error("validation error: {0}")]
    Validation(String),
    /// Mathematically outside the domain, e.g. an unphysical eigenvalue.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two independent computations disagree. Signals a bug, not bad input.
    #[error("consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
