//! CLI error taxonomy mapped onto process exit codes.

use qmem_core::CoreError;
use thiserror::Error;

/// Exit codes: 0 success, 2 validation failure, 3 numeric/runtime failure,
/// 64 usage error.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field {field:?}: {message}")]
    Config { field: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Self::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        Self::Io { path: path.to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Validation(_) => EXIT_VALIDATION,
            Self::Numeric(_) | Self::Io { .. } => EXIT_NUMERIC,
            Self::Core(core) => match core {
                CoreError::NumericOverflow { .. } => EXIT_NUMERIC,
                _ => EXIT_VALIDATION,
            },
        }
    }
}
