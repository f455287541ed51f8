use thiserror::Error;

/// Errors raised while building, loading or running decoders.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed alist input, tagged with the 1-based source line.
    #[error("alist line {line}: {kind}")]
    Alist { line: usize, kind: AlistErrorKind },

    /// Malformed cppnet-v1 weight file.
    #[error("weight file line {line}: {msg}")]
    Weights { line: usize, msg: String },

    /// Malformed or invalid projection-sample CSV.
    #[error("sample file: {0}")]
    Samples(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite value or non-terminating iteration.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlistErrorKind {
    DimensionMismatch(String),
    IndexOutOfRange { index: usize, bound: usize },
    Inconsistent(String),
    Syntax(String),
    DegenerateCheck { check: usize, degree: usize },
}

impl std::fmt::Display for AlistErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlistErrorKind::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            AlistErrorKind::IndexOutOfRange { index, bound } => {
                write!(f, "index {index} out of range 1..={bound}")
            }
            AlistErrorKind::Inconsistent(msg) => write!(f, "row/column inconsistency: {msg}"),
            AlistErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            AlistErrorKind::DegenerateCheck { check, degree } => {
                write!(f, "check {check} has degree {degree}, at least 2 required")
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
