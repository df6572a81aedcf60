use thiserror::Error;

/// Errors surfaced by the optimizer and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("rank-one reconstruction failed: ratio {ratio:.3e} exceeds {tolerance:.1e}")]
    RankViolation { ratio: f64, tolerance: f64 },

    #[error("outer line search stalled at |phi| = {residual:.3e}")]
    LineSearchStall { residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
