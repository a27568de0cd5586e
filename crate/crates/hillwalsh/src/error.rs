use thiserror::Error;

/// Errors produced by the discriminant pipeline.
#[derive(Debug, Error)]
pub enum HillError {
    /// A size/order parameter is outside the supported range.
    #[error("size error: {0}")]
    Size(String),

    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The sampling denominator 2^(2k+2) + tau^2 (alpha + beta p_n) vanished.
    /// `index` is the first offending sample index n (1-based).
    #[error("singularity: alpha + beta*p_n = -2^(2k+2)/tau^2 at sample index {index}")]
    Singular { index: usize },

    /// A dense solve hit an (almost) singular or badly conditioned matrix.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A user-supplied function produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Bad CLI/config input.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, HillError>;
