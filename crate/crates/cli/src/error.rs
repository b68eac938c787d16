use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] gdm_core::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        use gdm_core::Error as E;
        match self {
            CliError::Core(
                E::SolverFailure { .. } | E::Positivity { .. } | E::BlowUp { .. } | E::ParticleEscaped { .. },
            )
            | CliError::Io { .. } => crate::EXIT_SOLVER,
            _ => crate::EXIT_INPUT,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
