use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for dataset of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("empty mini-batch")]
    EmptyBatch,

    #[error("non-finite value at epoch {epoch}, step {step}: {what}")]
    NonFinite { epoch: usize, step: usize, what: String },

    #[error("n = {n} exceeds the enumeration cap of {cap}")]
    TooLargeToEnumerate { n: usize, cap: usize },

    #[error("parameter regime violated: {0}")]
    Regime(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
