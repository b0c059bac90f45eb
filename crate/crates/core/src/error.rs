use thiserror::Error;

/// Errors raised by the simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("divergent KL term: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::SimError::$kind(format!($($arg)*)))
    };
}

pub(crate) use bail;
