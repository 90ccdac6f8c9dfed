use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing prerequisite {}: run `{stage}` first", path.display())]
    Prerequisite { path: PathBuf, stage: &'static str },

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] patchsvm::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use patchsvm::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::Convergence { .. }) => EXIT_CONVERGENCE,
            CliError::Core(E::Evaluation { source, .. }) if matches!(**source, E::Convergence { .. }) => EXIT_CONVERGENCE,
            _ => EXIT_DATA,
        }
    }
}
