use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested root perturbation breaks root ordering or leaves its group.
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// A target value lies outside the attainable range of a monotone map.
    #[error("target {target} outside attainable range [{lo}, {hi}]")]
    Range { target: f64, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
