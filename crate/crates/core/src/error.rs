use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not ready: {0}")]
    NotReady(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_mismatch(what: &str, expected: usize, got: usize) -> Error {
    Error::Input(format!("{what}: expected length {expected}, got {got}"))
}
