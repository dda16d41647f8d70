use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const CAP: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent input; the message names the location.
    #[error("{0}")]
    Validation(String),

    #[error("resource cap: {0}")]
    Cap(ergolab::Error),

    #[error("{0}")]
    Runtime(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Cap(_) => exit::CAP,
            CliError::Runtime(_) | CliError::Io { .. } => exit::FAILURE,
        }
    }

    /// Wraps a core error raised while setting an experiment up; anything
    /// but a cap violation is reported against `field`.
    pub fn at_field(field: &str, err: ergolab::Error) -> Self {
        match err {
            e @ ergolab::Error::CapExceeded { .. } => CliError::Cap(e),
            e => CliError::Validation(format!("field `{field}`: {e}")),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Errors raised during computation, after validation succeeded.
impl From<ergolab::Error> for CliError {
    fn from(err: ergolab::Error) -> Self {
        match err {
            e @ ergolab::Error::CapExceeded { .. } => CliError::Cap(e),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
