//! Library side of the `efc` command: run configuration, stage commands
//! and manifests.

pub mod commands;
pub mod config;
pub mod manifest;

use ensemble_forecast::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] Error),
}

impl CliError {
    /// 2 for usage and input problems, 1 for domain failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::Domain { .. } | Error::Contract { .. }) => 1,
            CliError::Core(_) => 2,
        }
    }
}
