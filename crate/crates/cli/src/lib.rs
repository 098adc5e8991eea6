//! Command-line driver: config files, runs, seed sweeps and report files.

pub mod app;
pub mod config;
pub mod report;

use cbo_core::cbo::CboError;
use cbo_core::estimation::EstimationError;
use cbo_core::graph::GraphError;
use cbo_core::policy::PolicyError;
use cbo_core::scenario::ScenarioError;
use cbo_core::scm::SemError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("scenario: {0}")]
    Scenario(ScenarioError),
    #[error("output: {0}")]
    Output(String),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("scm: {0}")]
    Sem(#[from] SemError),
    #[error("estimation: {0}")]
    Estimation(#[from] EstimationError),
    #[error("policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("cbo: {0}")]
    Cbo(#[from] CboError),
    #[error("sweep: {failed} of {total} seeds failed")]
    SeedsFailed { failed: usize, total: usize },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit status: 2 unknown scenario, 3 unwritable output,
    /// 4 missing estimand, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::UnknownScenario(_) | CliError::Scenario(ScenarioError::Unknown(_)) => 2,
            CliError::Output(_) => 3,
            CliError::Estimation(EstimationError::NoEstimand(_))
            | CliError::Cbo(CboError::Estimation(EstimationError::NoEstimand(_))) => 4,
            _ => 1,
        }
    }
}

pub fn output_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}
