use std::path::PathBuf;

use repro_bound_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes. Stable; scripts may rely on them.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const IO: i32 = 3;
    pub const INCOMPLETE: i32 = 4;
    pub const OUT_OF_REGIME: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Incomplete(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Io { .. } => exit::IO,
            CliError::Incomplete(_) => exit::INCOMPLETE,
            CliError::Core(e) => match e {
                CoreError::Io { .. } => exit::IO,
                CoreError::IncompleteArchive { .. } => exit::INCOMPLETE,
                CoreError::OutOfRegime { .. } => exit::OUT_OF_REGIME,
                _ => exit::INPUT,
            },
        }
    }

    /// Extra lines worth printing after the headline message.
    pub fn details(&self) -> Vec<String> {
        match self {
            CliError::Core(CoreError::IncompleteArchive { missing, .. }) => missing.clone(),
            _ => Vec::new(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
