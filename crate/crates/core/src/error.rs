use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An amplitude vector with no norm was supplied.
    #[error("degenerate state: {0}")]
    DegenerateState(String),
    /// The request exceeds a hard size cap (statevector width, sample count).
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    /// A computed value contradicts an invariant; signals a bug upstream.
    #[error("inconsistent value: {0}")]
    InconsistentValue(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::CapacityExceeded(msg.into())
    }
}
