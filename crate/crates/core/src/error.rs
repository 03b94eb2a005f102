use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid population size {0}: need at least two agents")]
    InvalidPopulation(usize),

    #[error("invalid interaction budget: {0}")]
    InvalidBudget(String),

    #[error("invalid modulus {0}: need m >= 2")]
    InvalidModulus(u64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
