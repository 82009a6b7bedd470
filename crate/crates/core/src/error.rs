use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("argument {value} is outside the domain of {what}")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("Gram matrix is numerically singular (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateGram { min_eigenvalue: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("could not bracket the root of {0}")]
    Bracket(&'static str),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("dual functional decreased by {decrease:e} and step backtracking was exhausted")]
    DualDecrease { decrease: f64 },

    #[error("non-finite or exploding value at step {step}")]
    BlowUp { step: usize },

    #[error("malformed snapshot {path:?}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
