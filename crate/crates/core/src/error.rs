use thiserror::Error;

/// Errors raised by the finite-model constructors and functionals.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cell space mismatch: {left} cells vs {right} cells")]
    SpaceMismatch { left: usize, right: usize },

    #[error("cell count {requested} exceeds the configured cap of {cap}")]
    CapExceeded { requested: u128, cap: usize },

    #[error("cell {cell} is outside a space of {n} cells")]
    CellOutOfRange { cell: usize, n: usize },

    #[error("forward map is not a permutation: {0}")]
    NotAPermutation(String),

    #[error("skew system needs {expected} fibers, got {got}")]
    FiberCountMismatch { expected: usize, got: usize },

    #[error("all fibers must share one fiber space")]
    FiberSpaceMismatch,

    #[error("conjugating system is not a skew product over the identity")]
    NotOverIdentity,

    #[error("dense family is empty")]
    EmptyFamily,

    #[error("index {index} out of range (available: {available})")]
    OutOfRange { index: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("wrong system kind: expected {expected}, got {got}")]
    WrongKind { expected: String, got: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
