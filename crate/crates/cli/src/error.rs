use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Parse(String),
    #[error("hypotheses failed: {}", ids.join(", "))]
    Hypotheses { ids: Vec<String>, detail: String },
    #[error("{0}")]
    Core(#[from] fbvp::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) | Self::Io { .. } => 2,
            Self::Hypotheses { .. } => 3,
            Self::Core(fbvp::Error::NoConvergence { .. }) => 4,
            Self::Core(_) => 2,
        }
    }
}
