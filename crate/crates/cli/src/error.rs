use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },

    #[error(transparent)]
    Design(#[from] tripole::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 is success; 1 usage, config or input error; 2 infeasible design;
    /// 3 solver budget exhausted or any other run failure.
    pub fn exit_code(&self) -> u8 {
        use tripole::Error as E;
        match self {
            CliError::Config(_) | CliError::Input { .. } => 1,
            CliError::Design(E::OutOfRange { .. } | E::InvalidParameter { .. } | E::DimensionMismatch { .. }) => 1,
            CliError::Design(E::Infeasible { .. }) => 2,
            CliError::Design(_) | CliError::Output { .. } => 3,
        }
    }
}
