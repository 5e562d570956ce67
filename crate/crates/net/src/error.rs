use std::io;

use gb_core::GbError;
use thiserror::Error;

pub type Result<T, E = NetError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("transport error: {0}")]
    Io(#[from] io::Error),
    #[error("cannot reach {addr}: {source}")]
    Connect { addr: String, source: io::Error },
    #[error("connection closed")]
    Closed,
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(usize),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("key {0} is already bound")]
    DuplicateKey(u64),
    #[error("table shut down")]
    Shutdown,
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("job failed: {0}")]
    Job(String),
    #[error("distributed run failed: {0}")]
    Distributed(String),
    #[error(transparent)]
    Gb(#[from] GbError),
}

impl NetError {
    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        NetError::Protocol(msg.into())
    }
}
