use thiserror::Error;

/// Errors raised by the core models, the simulators and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("simulation did not terminate: {0}")]
    NonTermination(String),

    #[error(
        "energy ledger violated: residual {residual:.3e} J at t = {time} s (receiver {receiver})"
    )]
    LedgerViolation {
        residual: f64,
        time: f64,
        receiver: usize,
    },

    #[error("degenerate objective: {0}")]
    DegenerateObjective(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
