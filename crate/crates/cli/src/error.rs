// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<floqopt::Error> for CliError {
    fn from(e: floqopt::Error) -> Self {
        match e {
            floqopt::Error::Io(_) | floqopt::Error::Json(_) => CliError::Io(e.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
