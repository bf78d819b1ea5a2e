use thiserror::Error;

use crate::conic::KktResiduals;
use crate::sparse_design::ReweightTrace;

/// Errors raised while validating inputs or running a design.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("malformed conic program: {0}")]
    MalformedProgram(String),

    #[error("design is infeasible: {reason}")]
    Infeasible {
        reason: String,
        /// Reweighting iterations completed before the failure, if any.
        trace: Option<ReweightTrace>,
    },

    #[error("solver stopped after {iterations} iterations without meeting tolerances ({residuals})")]
    MaxIterations {
        iterations: usize,
        residuals: KktResiduals,
        trace: Option<ReweightTrace>,
    },

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
