//! CLI error type and exit codes.

use std::path::PathBuf;

use iga_dual::IgaError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid input data: {0}")]
    Data(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: IgaError,
    },
}

impl CliError {
    /// 2 config or input error, 3 numerical failure, 4 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Data(_) => 2,
            CliError::Numerical { source, .. } if source.is_numerical() => 3,
            CliError::Numerical { .. } => 2,
            CliError::Io { .. } => 4,
        }
    }

    pub fn from_core(context: impl Into<String>, source: IgaError) -> Self {
        CliError::Numerical {
            context: context.into(),
            source,
        }
    }
}
