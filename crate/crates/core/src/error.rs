use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("angle {0} rad is outside the open interval (-pi/2, pi/2)")]
    AngleDomain(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("multicast rate is undefined without users")]
    UndefinedRate,

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("dual point is infeasible: A(lambda, mu) has eigenvalue {0:e}")]
    DualInfeasible(f64),

    #[error("rank deficient: {0}")]
    Rank(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("too many failed trials: {failed} of {trials}")]
    TrialFailures { failed: usize, trials: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
