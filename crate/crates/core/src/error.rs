use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsbError {
    #[error("point lies behind the array plane (x = {0})")]
    BehindArray(f64),
    #[error("direction undefined at the array origin")]
    Origin,
    #[error("invalid array configuration: {0}")]
    InvalidArray(String),
    #[error("dimension mismatch: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("empty angle grid")]
    EmptyGrid,
    #[error("channel estimate is zero")]
    NoChannel,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no permissible trajectory: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, CsbError>;
