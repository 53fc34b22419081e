use thiserror::Error;

use crate::continuation::ContinuationTrace;
use crate::system::Solution;

pub type Result<T> = std::result::Result<T, MfgError>;

#[derive(Debug, Error)]
pub enum MfgError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {got} does not match grid size {expected}")]
    FieldLength { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Density fell below the admissible floor (log coupling or FP positivity).
    #[error("positivity lost: min m = {min_m:e} (floor {floor:e})")]
    Positivity { min_m: f64, floor: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(
        "newton did not converge after {iterations} iterations (residual {residual:e}): {reason}"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
        last: Box<Solution>,
    },

    #[error("assumption gate failed: {0}")]
    Gate(String),

    #[error("continuation step collapsed below {step_min:e} at lambda = {lambda}")]
    StepCollapse {
        lambda: f64,
        step_min: f64,
        partial: Box<ContinuationTrace>,
    },
}
