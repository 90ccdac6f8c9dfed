use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("bounds error: {0}")]
    Bounds(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible nu: nu = {nu} exceeds 2*min(n_pos, n_neg)/n = {max}")]
    InfeasibleNu { nu: f64, max: f64 },

    #[error("selection error: {0}")]
    Selection(String),

    #[error("search error: {0}")]
    Search(String),

    #[error("parse error in tensor `{tensor}`: {reason}")]
    TensorParse { tensor: String, reason: String },

    #[error("shape mismatch for tensor `{tensor}`: expected {expected:?}, found {found:?}")]
    TensorShape {
        tensor: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("missing tensor `{0}`")]
    MissingTensor(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("solver did not converge after {iterations} iterations (KKT residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        /// Best dual iterate reached before the budget ran out.
        alpha: Vec<f64>,
    },

    #[error("evaluation failed on case {case}: {source}")]
    Evaluation {
        case: String,
        /// `(case, test AUC)` for the cases finished before the failure.
        completed: Vec<(String, f64)>,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
