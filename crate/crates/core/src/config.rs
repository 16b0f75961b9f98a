//! TOML configuration: scenario sections plus solver settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bcd::SolverConfig;
use crate::error::{Error, Result};
use crate::scenario::{ArchitectureSpec, GlobalParams, ScenarioConfig, TaskRanges};

/// A full configuration file. Every section and key is optional.
///
/// ```toml
/// [params]
/// num_terminals = 20
/// edge_capacity = 1.96608e12
///
/// [tasks]
/// ratio_max = 5.0
///
/// [architecture]
/// kernel_choices = [3, 5]
///
/// [solver]
/// max_rounds = 50
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub params: GlobalParams,
    pub tasks: TaskRanges,
    pub architecture: ArchitectureSpec,
    pub solver: SolverConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario_config().validate()?;
        self.solver.validate()
    }

    pub fn scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            params: self.params.clone(),
            tasks: self.tasks.clone(),
            architecture: self.architecture.clone(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
