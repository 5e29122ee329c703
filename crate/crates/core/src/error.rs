use thiserror::Error;

/// Errors raised by constructors and samplers in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GwError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degree sequence is not a tree encoding: {0}")]
    NotATree(String),
    #[error("sampling budget exhausted after {0} draws")]
    BudgetExhausted(u64),
    #[error("conditioning event has zero probability: {0}")]
    ImpossibleConditioning(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GwError {
    fn from(e: std::io::Error) -> Self {
        GwError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GwError>;
