//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain has no interior grid points (shape below grid resolution)")]
    EmptyInterior,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("CFL violation: dt*c_max/h = {actual:.6} exceeds limit {limit:.6}")]
    CflViolation { actual: f64, limit: f64 },

    #[error("non-finite field value encountered {context}")]
    NonFinite { context: String },

    #[error("numerical blow-up detected at time step {step}")]
    Blowup { step: usize },

    #[error("conjugate gradient did not converge within {max_iter} iterations (residual {residual:.3e})")]
    CgDidNotConverge { max_iter: usize, residual: f64 },

    #[error("relaxation parameter must lie in (0, 2], got {0}")]
    LambdaOutOfRange(f64),

    #[error("iteration diverged at step {iter}: residual grew by more than 1.5x for 5 consecutive steps")]
    Divergence { iter: usize },

    #[error("reconstruction failed at iteration {iter}: {source}")]
    Iteration {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid phantom or speed parameters: {0}")]
    InvalidSpec(String),

    #[error("registry parse error: {0}")]
    Registry(String),

    #[error("malformed field file header: {0}")]
    MalformedHeader(String),

    #[error("truncated field payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("field size mismatch: header declares {header} values, payload holds {payload}")]
    SizeMismatch { header: usize, payload: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
