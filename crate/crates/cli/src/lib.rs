//! Scenario-driven front end: parses a config, runs one subcommand and writes
//! CSV/JSON artifacts tagged with the config hash and seed.

pub mod config;
pub mod output;
pub mod run;

use thiserror::Error;

pub use config::ScenarioConfig;
pub use run::{run_scenario, Command, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Budget(String),
    /// A checked inequality failed; outputs were still written.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 validation, 2 budget, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<ergoscope_core::Error> for CliError {
    fn from(e: ergoscope_core::Error) -> Self {
        match e {
            ergoscope_core::Error::Budget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
