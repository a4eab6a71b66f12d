// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use chronosteer::{Error, ErrorClass};

/// Process exit codes. `2` is left to clap for usage errors.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const IO: u8 = 4;
    pub const FORMAT: u8 = 5;
    pub const MISMATCH: u8 = 6;
    pub const DATA: u8 = 7;
    pub const PARAMETER: u8 = 8;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Io => exit::IO,
                ErrorClass::Format => exit::FORMAT,
                ErrorClass::Mismatch => exit::MISMATCH,
                ErrorClass::Data => exit::DATA,
                ErrorClass::Parameter => exit::PARAMETER,
            },
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Json(_) => exit::FORMAT,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
