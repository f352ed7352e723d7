use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {what} (residual estimate {residual:e})")]
    Numerical { what: String, residual: f64 },

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupted state: {0}")]
    CorruptedState(String),

    #[error("config parse error at line {line}, key `{key}`: {message}")]
    Parse { line: usize, key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
