use std::path::PathBuf;

use thiserror::Error;

/// Rejected configuration or precondition violation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
    #[error("cannot parse config {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("configs differ outside the controller: {0}")]
    Mismatch(String),
}

impl ConfigError {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

/// A signal went non-finite during a run.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("simulation fault at step {step}: {signal} = {value}")]
pub struct SimulationFault {
    pub step: usize,
    pub signal: &'static str,
    pub value: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Simulation(#[from] SimulationFault),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
