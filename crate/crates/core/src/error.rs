use thiserror::Error;

/// Errors produced by the cantorlab library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("cannot remove the last symbol of the empty word")]
    EmptyWord,

    #[error("model invalid: {0}")]
    ModelInvalid(String),

    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),

    #[error("unsupported localizing prefix: {0}")]
    UnsupportedPrefix(String),

    #[error("enumeration too large: estimated {estimated} leaves exceeds the guard of {limit}")]
    TooLarge { estimated: String, limit: u64 },

    #[error("requested tolerance not reached within depth {0}")]
    DepthExceeded(usize),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("delta too large: {0}")]
    DeltaTooLarge(String),

    #[error("precondition failed: {0}")]
    PrecondFailed(String),

    #[error("point outside the domain of the map: {0}")]
    OutOfDomain(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
