use std::path::Path;

use thiserror::Error;
use tumour_core::Error as ModelError;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NO_ROOT: i32 = 3;
    pub const SINGULAR_SYSTEM: i32 = 4;
    pub const DEGENERATE_WINDOW: i32 = 5;
    pub const CLOSURE_UNRESOLVED: i32 = 6;
    pub const MODEL: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Model(#[from] ModelError),

    #[error("{path}: {message}")]
    Input { path: String, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Config(_) | CliError::Input { .. } => exit::CONFIG,
            CliError::Model(e) => match e {
                ModelError::NoRoot => exit::NO_ROOT,
                ModelError::SingularSystem { .. } => exit::SINGULAR_SYSTEM,
                ModelError::DegenerateWindow(_) => exit::DEGENERATE_WINDOW,
                ModelError::ClosureUnresolved { .. } => exit::CLOSURE_UNRESOLVED,
                ModelError::InvalidParameter(_) => exit::CONFIG,
                _ => exit::MODEL,
            },
        }
    }
}
