//! Experiment runner and file-level tools around the `opencrowd` library.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod io;
pub mod report;

/// Failures, split by exit status: bad input is 2, anything that goes
/// wrong while running is 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<opencrowd::Error> for CliError {
    fn from(e: opencrowd::Error) -> Self {
        use opencrowd::Error::*;
        match e {
            Config(_) | InvalidImage(_) | InvalidTree(_) | InvalidPartition(_) | InvalidHierarchy(_)
            | InvalidClustering(_) | InvalidPlan(_) | InvalidFrontier(_) | DomainMismatch => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
