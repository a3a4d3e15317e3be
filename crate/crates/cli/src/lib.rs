//! Batch front-end: configuration, data loading, and the four commands that
//! write run artifacts to an output directory.

use std::path::{Path, PathBuf};

use finshap_core::error::ErrorCategory;

pub mod commands;
pub mod config;

pub use commands::{cmd_explain, cmd_synthesize, cmd_train_eval, cmd_validate};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] finshap_core::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 configuration, 3 data (including unreadable or unwritable files), 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Config => 2,
                ErrorCategory::Data | ErrorCategory::Io => 3,
                ErrorCategory::Numerical => 4,
            },
        }
    }
}
