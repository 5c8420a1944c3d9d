use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} is below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("function is not even: phi({t}) = {positive:e} but phi(-{t}) = {negative:e}")]
    NotEven { t: f64, positive: f64, negative: f64 },

    #[error("quadrature did not converge: doubling the node count moved the result by {change:e}")]
    Quadrature { change: f64 },

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
