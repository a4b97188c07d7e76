//! Batch front end for the `cojump` library: subcommand stages, a TOML run
//! configuration and a manifest-tracked pipeline.

pub mod config;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod stages;

use std::path::{Path, PathBuf};

pub use config::RunConfig;
pub use manifest::RunManifest;
pub use pipeline::{run_pipeline, PipelineOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cojump::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("config: {0}")]
    Config(String),
    #[error("stage '{stage}' failed: {source}")]
    Stage { stage: String, source: Box<CliError> },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
