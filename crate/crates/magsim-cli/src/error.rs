//! Error type mapping failures to process exit codes: configuration and
//! usage problems exit with 1, numerical or I/O failures with 2.

use crate::config::ConfigError;
use magsim_core::CoreError;
use std::fmt;

/// Anything that can abort a run.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or usage; exits with code 1.
    Config(ConfigError),
    /// The core library rejected the computation; exits with code 2.
    Numeric {
        /// What the tool was doing when the failure surfaced.
        context: String,
        /// Underlying failure.
        source: CoreError,
    },
    /// Filesystem failure while writing artifacts; exits with code 2.
    Io {
        /// What the tool was doing when the failure surfaced.
        context: String,
        /// Underlying failure.
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric { .. } | CliError::Io { .. } => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numeric { context, source } => {
                write!(f, "numerical failure while {context}: {source}")
            }
            CliError::Io { context, source } => {
                write!(f, "I/O failure while {context}: {source}")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Attaches a short activity description when converting library errors.
pub trait WithContext<T> {
    /// Wraps the error with `context` describing the failed activity.
    fn context(self, context: &str) -> Result<T, CliError>;
}

impl<T> WithContext<T> for Result<T, CoreError> {
    fn context(self, context: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric {
            context: context.to_string(),
            source,
        })
    }
}

impl<T> WithContext<T> for std::io::Result<T> {
    fn context(self, context: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Io {
            context: context.to_string(),
            source,
        })
    }
}
