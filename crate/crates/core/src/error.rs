use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The shape parameter lies outside `q < 1 + 2/N`.
    #[error(
        "q = {q} is outside the q-Gaussian domain for dimension {dim} (q must be below {limit})"
    )]
    Domain { q: f64, dim: usize, limit: f64 },

    /// The requested moment is infinite for this `(q, N)`.
    #[error("moment does not exist for q = {q}, N = {dim}: {reason}")]
    MomentDoesNotExist { q: f64, dim: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A perturbation with non-positive rho reached an estimator.
    #[error("non-positive rho factor {rho}; perturbation lies outside the kernel support")]
    NonPositiveRho { rho: f64 },

    #[error("gradient estimate diverged at outer iteration {outer}, inner step {inner}: |Z| = {magnitude:e}")]
    Diverged {
        outer: usize,
        inner: usize,
        magnitude: f64,
    },

    #[error("simulator failed at outer iteration {outer}, inner step {inner} (seed {seed}, stream {stream}): {message}")]
    Simulator {
        outer: usize,
        inner: usize,
        seed: u64,
        stream: u64,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),
}
