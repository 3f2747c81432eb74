use thiserror::Error;

use clbench::episode::EpisodeError;
use clbench::gateway::GatewayError;
use clbench::stats::StatsError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("statistics: {0}")]
    StatsTie(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Backend(_) => 3,
            CliError::InfeasibleSplit(_) => 4,
            CliError::StatsTie(_) => 5,
        }
    }
}

impl From<EpisodeError> for CliError {
    fn from(e: EpisodeError) -> Self {
        if e.is_infeasible_split() {
            return CliError::InfeasibleSplit(e.to_string());
        }
        match e {
            EpisodeError::Listener { .. } => CliError::Backend(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Backend(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::TieAtBoundary { .. } => CliError::StatsTie(e.to_string()),
            StatsError::Io(_) => CliError::Other(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
