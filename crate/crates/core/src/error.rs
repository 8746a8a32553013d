use crate::newton::NewtonReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid spacing mismatch: {0} vs {1}")]
    SpacingMismatch(f64, f64),

    #[error("positions are not strictly increasing at index {index} (outside Q)")]
    OutsideQ { index: usize },

    #[error("tridiagonal solve broke down at row {row}: pivot {pivot:e}")]
    SingularHessian { row: usize, pivot: f64 },

    #[error("Newton iteration did not converge after {} iterations (decrement {:e})", .0.iterations, .0.final_decrement)]
    NonConvergence(Box<NewtonReport>),

    #[error("damped step could not be kept inside Q at iteration {iteration}")]
    Infeasible { iteration: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{problem} sub-problem failed: {source}")]
    SubProblem {
        problem: &'static str,
        #[source]
        source: Box<Error>,
    },
}
