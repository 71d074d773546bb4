use thiserror::Error;

/// Configuration problems exit with 2, everything else with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("csv schema: {0}")]
    Schema(String),

    #[error("{path}: exists with different contents (use --force to overwrite)")]
    WouldOverwrite { path: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Sim(#[from] netbandit::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 2,
            _ => 1,
        }
    }
}
