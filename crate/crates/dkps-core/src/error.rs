//! Error type shared by the whole crate, with the CLI exit-code mapping.

use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shape mismatch: non-square input, incompatible dimensions, d > n.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Input violates a precondition (asymmetry, bad parameter range, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The spectrum carries no usable signal for the requested embedding.
    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    /// An iterative kernel failed to converge within its budget.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Malformed input data (ragged cells, unparseable fields, missing cells).
    #[error("ingestion error: {0}")]
    Ingestion(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 0 ok, 2 validation, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Dimension(_)
            | Error::Validation(_)
            | Error::Domain(_)
            | Error::DegenerateEmbedding(_)
            | Error::Ingestion(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
