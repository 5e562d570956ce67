use gb_core::GbError;
use gb_net::NetError;
use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Gb(#[from] GbError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("harness: {0}")]
    Harness(String),
}
