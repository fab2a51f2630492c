use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] capspace_core::Error),

    #[error("{path}: {source}")]
    InFile { path: PathBuf, source: capspace_core::Error },

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{file} not found in {dir}; run `capspace {stage}` first")]
    MissingStage { stage: &'static str, file: &'static str, dir: PathBuf },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::InFile { source: e, .. } if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
