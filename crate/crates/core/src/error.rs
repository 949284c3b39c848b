use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The exact solver refused an instance above its configured size.
    #[error("exact solver capacity exceeded: support size {size} > limit {limit}")]
    Capacity { size: usize, limit: usize },

    /// Entropic scaling broke down (underflow or overflow of the scaling vectors).
    #[error("numerical failure in Sinkhorn scaling with reg = {reg}: {detail}")]
    Numerical { reg: f64, detail: String },

    /// Malformed text input; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Malformed binary input.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A failure inside one benchmarked method, tagged with its name.
    #[error("method {method}: {inner}")]
    Method { method: String, inner: Box<Error> },
}

impl Error {
    /// The error with any method tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Method { inner, .. } => inner.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
