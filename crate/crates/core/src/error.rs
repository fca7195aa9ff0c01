use thiserror::Error;

/// Errors raised by graph constructions, moves and the projection calculus.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed input: dimension mismatch, duplicate names, bad JSON shape.
    #[error("validation error: {0}")]
    Validation(String),
    #[error("vertex not found: {0}")]
    NotFound(String),
    /// An operation was called outside the domain where it is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A move's preconditions do not hold.
    #[error("move error: {0}")]
    Move(String),
    /// A head of infinite length cannot be expanded into finitely many vertices.
    #[error("cannot realize: {0}")]
    CannotRealize(String),
    /// A post-condition check failed; this indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}

pub(crate) use bail;
