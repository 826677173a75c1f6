//! CLI failure with its process exit code.
//!
//! Codes: 0 ok, 2 config error, 3 numerical error, 4 internal consistency
//! failure, 5 statistical test failure.

use std::fmt;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: message.into(),
        }
    }

    pub fn statistical(message: impl Into<String>) -> Self {
        Self {
            code: 5,
            message: message.into(),
        }
    }
}

/// Maps a core error raised during computation (after the config was
/// accepted) to a numerical failure.
pub fn numerical(err: smra_core::Error) -> CliError {
    CliError::numerical(err.to_string())
}

pub type CliResult<T> = Result<T, CliError>;
