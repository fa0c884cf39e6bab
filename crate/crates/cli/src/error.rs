use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    ConfigParse(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cache entry {path} is corrupt: {reason}")]
    CorruptCache { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] tjent::Error),

    /// Some grid points failed; their rows carry the messages.
    #[error("{failed} of {total} grid points failed")]
    PartialFailure { failed: usize, total: usize, capacity: bool },
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for solver failures, 4 when a sector
    /// exceeds the capacity limit, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigParse(_) | CliError::Config { .. } => 2,
            CliError::Core(e) => core_exit_code(e),
            CliError::PartialFailure { capacity: true, .. } => 4,
            CliError::PartialFailure { .. } => 3,
            CliError::Io { .. } | CliError::CorruptCache { .. } => 1,
        }
    }
}

pub fn core_exit_code(e: &tjent::Error) -> u8 {
    match e {
        tjent::Error::Capacity { .. } => 4,
        tjent::Error::InvalidParams(_) => 2,
        _ => 3,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
