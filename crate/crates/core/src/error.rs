use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex id {0}")]
    UnknownVertex(u32),
    #[error("unknown arc {0}")]
    UnknownArc(String),
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error("structure error: {0}")]
    Structure(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
