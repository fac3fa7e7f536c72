use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {requested} exceeds the configured maximum {max}")]
    Size { requested: usize, max: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("operation not available for this boundary: {0}")]
    Mode(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("state is not an eigenvector of the commuting family: {0}")]
    Degeneracy(String),
    #[error("degenerate-block refinement failed: {0}")]
    Refinement(String),
    #[error("ill-conditioned problem: {0}")]
    Conditioning(String),
    #[error("root polishing failed at {root}: {reason}")]
    RootQuality { root: String, reason: String },
    #[error("string classification failed: {0}")]
    Classification(String),
    #[error("singular evaluation: {0}")]
    Singularity(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("inconsistent result: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
