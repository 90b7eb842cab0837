//! Command-line front end for `sadiclab`: run configuration, figure
//! rendering and the subcommands.

pub mod commands;
pub mod config;
pub mod render;

use thiserror::Error;

pub use commands::{run, COMMANDS};
pub use config::{Format, RunConfig};

/// Operational errors. They make the process exit with a nonzero status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Library(#[from] sadiclab::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("configuration line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("refusing to draw: {0}")]
    Guard(String),
}
