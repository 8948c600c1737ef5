use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] vortex_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for invalid input, 3 for numerical failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        use vortex_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                E::InvalidParameter { .. }
                | E::OmegaOutsideWindow { .. }
                | E::NonFinite(_)
                | E::RegimeMismatch { .. }
                | E::LengthMismatch { .. }
                | E::GridTooSmall(_)
                | E::ProfileInvariant(_) => 2,
                _ => 3,
            },
        }
    }
}
