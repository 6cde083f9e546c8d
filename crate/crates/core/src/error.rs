use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("IoD index {index} out of range for {num_iods} devices")]
    IndexOutOfRange { index: usize, num_iods: usize },

    #[error("stationary solve failed: {reason} (residual {residual:e})")]
    Solver { reason: String, residual: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("solution not converged after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("policy {0} has no analytical model")]
    NotAnalyzable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
