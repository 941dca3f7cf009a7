use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Domain geometry that cannot be meshed (e.g. annulus with r0 >= r1).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A nonlinearity whose constants violate the admissibility constraints.
    #[error("invalid nonlinearity: {0}")]
    InvalidSpec(String),

    /// Caller error: empty grid, mismatched mesh, bad configuration value.
    #[error("usage: {0}")]
    Usage(String),

    /// The reaction derivative is not defined at t = 0 for the raw
    /// nonlinearity; regularized kernels must be used there instead.
    #[error("f' is undefined at t = 0 (f is C1 only away from the origin)")]
    DerivativeAtZero,

    /// A Nehari projection was requested for a field with no positive part.
    #[error("constraint infeasible: {0}")]
    ConstraintInfeasible(String),

    /// An operation that is only defined for alpha > 0 was called at alpha = 0.
    #[error("regularization required (alpha > 0): {0}")]
    AlphaZero(String),

    /// Bound verification refused because the growth assumptions failed.
    #[error("growth assumptions not satisfied: {0}")]
    AssumptionsFailed(String),

    /// The Lyapunov-Schmidt corrector did not converge inside the trust region.
    #[error("trust radius exceeded: {0}")]
    TrustRadius(String),

    /// Factorization or eigensolver breakdown.
    #[error("linear algebra failure: {0}")]
    Linalg(String),

    /// A mandatory solve stage exhausted its budget above tolerance.
    #[error("stage did not converge: {0}")]
    NonConverged(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
