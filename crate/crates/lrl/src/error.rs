//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of the operands do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An input violates a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The iterative SVD routine did not converge.
    #[error("SVD did not converge")]
    SvdConvergence,

    /// A solver or iterative routine broke down numerically.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed problem/report file.
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },

    /// Problem file carries a version this build does not understand.
    #[error("unsupported file version {found} (this build reads version {expected})")]
    Version { found: u64, expected: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(err: &serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            msg: err.to_string(),
        }
    }
}
