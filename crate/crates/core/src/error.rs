use thiserror::Error;

/// Errors raised by model construction, numerical routines and the report layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation outside the region where a quantity is defined (e.g. `g(r) = 0`).
    #[error("domain error: {0}")]
    Domain(String),
    /// A precondition on the inputs does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An iterative routine did not reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),
    /// Inputs are formally valid but produce an empty or zero object.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Operation requires a different kind of model.
    #[error("operation not applicable: {0}")]
    NotApplicable(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
