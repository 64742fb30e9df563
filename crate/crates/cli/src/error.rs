use std::path::{Path, PathBuf};

use thiserror::Error;

/// Command failures, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: latop::Error },
    #[error(transparent)]
    Lib(#[from] latop::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub mod exit {
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const SIZE: i32 = 4;
    pub const INPUT: i32 = 5;
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn in_file(path: &Path, source: latop::Error) -> Self {
        CliError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        let lib = match self {
            CliError::Io { .. } => return exit::IO,
            CliError::Config(_) => return exit::CONFIG,
            CliError::File { source, .. } | CliError::Lib(source) => source,
        };
        match lib {
            latop::Error::Parse { .. } => exit::PARSE,
            latop::Error::Size { .. } => exit::SIZE,
            latop::Error::Input(_) | latop::Error::UnsupportedPolicy(_) => exit::INPUT,
        }
    }

    /// One-word category printed ahead of the message.
    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            exit::IO => "io",
            exit::CONFIG => "config",
            exit::PARSE => "parse",
            exit::SIZE => "size",
            _ => "input",
        }
    }
}

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
