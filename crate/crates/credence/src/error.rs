//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A prediction dump or score table failed validation during load.
    #[error("ingestion error at line {line}: {message}")]
    Ingestion { line: usize, message: String },

    /// An argument violated an operation's preconditions.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Too few values to compute a variance-based statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A hierarchy file failed structural validation.
    #[error("hierarchy error: {0}")]
    Hierarchy(String),

    /// The prior-shift system is rank-deficient beyond one dimension
    /// (posterior contains zeros); enable epsilon smoothing to proceed.
    #[error("degenerate system: {0}")]
    Degenerate(String),

    /// The iterative eigenvector solve failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn ingestion(line: usize, message: impl Into<String>) -> Self {
        Error::Ingestion {
            line,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}
