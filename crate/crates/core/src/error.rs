use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("constraint or chain is not irreducible")]
    Reducible,
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} exceeds the limit of {limit}")]
    ResourceLimit { what: String, limit: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures caused by the caller's input rather than by the
    /// numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::ResourceLimit { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
