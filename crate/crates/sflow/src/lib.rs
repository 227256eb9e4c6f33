//! Experiment driver: JSON configs in, CSV bundles and JSON reports out.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

/// Failure classes with their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] sflow_core::Error),
    #[error("certificate verdict is violated")]
    Violated,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Violated => 4,
        }
    }
}
