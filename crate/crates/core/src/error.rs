use thiserror::Error;

/// Errors raised across the suite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation error: {what} tail estimate {tail:.3e} exceeds tolerance {tol:.1e}")]
    Truncation { what: String, tail: f64, tol: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver error: {what} (residual {residual:.3e})")]
    Solver { what: String, residual: f64 },

    #[error("resolution error: {what} residual {residual:.3e} above tolerance {tol:.1e}")]
    Resolution { what: String, residual: f64, tol: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
