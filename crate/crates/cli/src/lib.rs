//! Experiment harness for `shotlearn`: configuration, the parallel cell
//! runner and one function per command. Every command writes CSV files to
//! the output directory and also returns its results for in-process use.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;

pub use cli::{run, Cli};
pub use config::{Command, ConfigFile, ExperimentConfig, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible experiment: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Core(shotlearn::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<shotlearn::Error> for CliError {
    fn from(e: shotlearn::Error) -> Self {
        use shotlearn::Error as E;
        match e {
            E::InfeasibleBudget(_) | E::MemoryGuard(_) | E::EmptyTrainingSet => CliError::Infeasible(e.to_string()),
            E::InvalidArgument(_) | E::Parse(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// Process exit status: 2 for configuration errors, 3 for infeasible
    /// experiments, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            _ => 1,
        }
    }
}
