use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// Quadrature or iteration did not reach the requested accuracy.
    /// `best` is the last value computed and `achieved` its error estimate.
    #[error("numeric failure: {what} (best {best:e}, achieved error {achieved:e})")]
    NumericFailure {
        what: String,
        best: f64,
        achieved: f64,
    },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("step budget of {budget} exceeded at t = {time:e}")]
    BudgetExceeded {
        budget: u64,
        time: f64,
        position: Vec<f64>,
    },
    #[error("experiment inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
