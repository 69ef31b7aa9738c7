use std::path::PathBuf;

use microgrid_core::domain::ValidationErrors;
use microgrid_core::feeder::FeederError;
use microgrid_core::milp::{ExtractError, LpError, SolveStatus};
use microgrid_core::schedule::CostError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("scenario rejected: {0}")]
    Validation(#[from] ValidationErrors),
    #[error("solver finished with status {0}")]
    Solve(SolveStatus),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("feeder: {0}")]
    Feeder(#[from] FeederError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn input(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Input { path: path.into(), message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Input { .. } | Error::Validation(_) | Error::Lp(_) => 3,
            Error::Solve(_) | Error::Extract(_) | Error::Cost(_) => 4,
            Error::Io { .. } => 5,
            Error::Feeder(_) => 6,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
