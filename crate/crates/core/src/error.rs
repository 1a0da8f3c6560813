use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected d = {expected}, got d = {got}")]
    DimensionMismatch { expected: f64, got: f64 },

    #[error("degree cap mismatch: expected K = {expected}, got K = {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("profile is not integrable: {0}")]
    NotIntegrable(String),

    #[error("operation unsupported for this field: {0}")]
    Unsupported(String),

    #[error("quadrature under-resolved: coarse estimate {coarse}, refined estimate {refined}")]
    UnderResolved { coarse: f64, refined: f64 },

    #[error("class violation: {0}")]
    ClassViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
