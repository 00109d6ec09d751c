use std::fmt;

use edgekit_core::Error;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, settings or arguments. Exit code 1.
    Usage(String),
    /// Missing, unreadable or inconsistent inputs. Exit code 2.
    Data(String),
    /// Broken internal invariant. Exit code 3.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) => CliError::Usage(e.to_string()),
            Error::Shape(_) => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
