use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("training diverged at iteration {iteration}; last finite iterate written to {saved}")]
    Diverged { iteration: usize, saved: String },
    #[error("verification failed: {0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] pesvlab_core::Error),
}

impl CliError {
    /// 0 success, 1 failed hard check, 2 usage or config, 3 i/o,
    /// 4 numerical divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Diverged { .. } => 4,
            CliError::Failed(_) => 1,
            CliError::Core(e) => match e {
                pesvlab_core::Error::Io(_) => 3,
                pesvlab_core::Error::Diverged { .. } => 4,
                _ => 2,
            },
        }
    }
}
