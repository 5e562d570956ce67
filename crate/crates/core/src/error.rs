use thiserror::Error;

pub type Result<T, E = GbError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GbError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("polynomials belong to different rings")]
    RingMismatch,
    #[error("exponent overflow")]
    ExponentOverflow,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("decode error: {0}")]
    Decode(String),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("worker failed: {0}")]
    Worker(String),
}

impl GbError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        GbError::Parse { line, msg: msg.into() }
    }
}
