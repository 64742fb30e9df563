//! File formats and subcommands of the `latop` tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod gen;
pub mod manifest;
pub mod pbm;

pub use error::{CliError, CliResult};
