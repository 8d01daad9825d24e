use thiserror::Error;

/// Errors produced while reading a dataset file.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: feature index {index} out of range for d={dim}")]
    FeatureOutOfRange { line: usize, index: usize, dim: usize },
    #[error("line {line}: label index {index} out of range for m={labels}")]
    LabelOutOfRange { line: usize, index: usize, labels: usize },
    #[error("line {line}: non-numeric value {token:?}")]
    NonNumeric { line: usize, token: String },
    #[error("declared {declared} instances but found {found}")]
    InstanceCount { declared: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors shared by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
