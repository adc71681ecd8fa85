use thiserror::Error;

/// Errors produced by the tomography library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configured limit (Fock cap, grid size, iteration count) was violated.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A Fock index does not fit in the requested truncation.
    #[error("truncation error: {0}")]
    Truncation(String),
    /// The likelihood or an EM update hit a non-positive mixture density.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// Estimation could not start, e.g. every event was excluded.
    #[error("estimation error: {0}")]
    Estimation(String),
    /// Malformed text input (state descriptions, dataset files, tables).
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
