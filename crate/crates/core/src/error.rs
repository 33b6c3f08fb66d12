use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument violates a documented precondition (counts, ranges, shapes).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Degenerate or inconsistent geometry.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// The matrix handed to the factorization is not positive definite.
    #[error("factorization failed at pivot {pivot}: value {value:e}")]
    Factorization { pivot: usize, value: f64 },

    /// An assembled stiffness matrix failed its positive-definiteness check.
    #[error("assembled stiffness matrix is not positive definite (pivot {pivot})")]
    AssemblyIntegrity { pivot: usize },

    /// The brute-force oracle could not certify its own accuracy.
    #[error("oracle inconclusive: estimated relative error {estimate:e}")]
    OracleInconclusive { estimate: f64 },

    /// Iterative solver ran out of iterations.
    #[error("conjugate gradients did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    /// Malformed file content.
    #[error("format error: {0}")]
    Format(String),

    /// Invalid study configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
