use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NUMERICAL: i32 = 70;
pub const EXIT_CANT_CREATE: i32 = 73;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] orthant::Error),

    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use orthant::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Output { .. } => EXIT_CANT_CREATE,
            CliError::Core(e) => match e {
                E::Numerical { .. } | E::EvaluationUnderflow(_) | E::DegenerateRow { .. } | E::AmbiguousMinimum { .. } => {
                    EXIT_NUMERICAL
                }
                _ => EXIT_DATA,
            },
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
