//! Engine configuration, read from a TOML file with environment overrides.

use std::path::Path;

use serde::Deserialize;

use crate::smt::SolverConfig;

/// Overrides the solver command line.
pub const SOLVER_ENV: &str = "FODOT_SOLVER";

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub port: u16,
    /// Idle sessions are dropped after this many seconds.
    pub idle_secs: u64,
    pub max_sessions: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            port: 8080,
            idle_secs: 30 * 60,
            max_sessions: 64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct ConsultConfig {
    /// Compute relevance only on request instead of after every edit.
    pub defer_relevance: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct Config {
    pub solver: SolverConfig,
    pub service: ServiceConfig,
    pub consult: ConsultConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::parse(&text)
    }

    /// Applies `FODOT_SOLVER` when set.
    pub fn with_env(mut self) -> Config {
        if let Ok(cmd) = std::env::var(SOLVER_ENV) {
            if !cmd.trim().is_empty() {
                self.solver.command = cmd;
            }
        }
        self
    }
}
