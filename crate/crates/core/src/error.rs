use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate coefficients: {0}")]
    DegenerateCoefficients(String),

    #[error("degenerate law: {0}")]
    DegenerateLaw(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite integrand value {value} at point {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid policy: {0}")]
    Policy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
