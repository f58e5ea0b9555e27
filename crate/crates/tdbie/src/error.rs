use thiserror::Error;

#[derive(Debug, Error)]
pub enum TdbieError {
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{needed} retarded matrices exceed the cap of {cap}; increase dt")]
    TooManyMatrices { needed: usize, cap: usize },
    #[error("leading matrix could not be factorized: {0}")]
    Factorization(String),
    #[error("source point lies on element {0}")]
    SourceOnSurface(usize),
    #[error("solution is not finite at step {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Core(#[from] convspline::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TdbieError>;
