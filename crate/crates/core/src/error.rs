use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("form degree {m} out of range for dimension {n}")]
    DegreeOutOfRange { n: usize, m: usize },
    #[error("dimension {0} is odd; the construction requires an even dimension")]
    OddDimension(usize),
    #[error("insufficient depth: order {needed} is below the truncation order {truncation}")]
    InsufficientDepth { needed: i32, truncation: i32 },
    #[error("leading symbol is not invertible in the symbol algebra")]
    NonInvertible,
    #[error("expected an operator of order {expected}, found order {found}")]
    WrongOrder { expected: i32, found: i32 },
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
