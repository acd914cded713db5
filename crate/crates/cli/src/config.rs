//! Rule and cost configuration file.

use std::fs;
use std::path::Path;

use crewseed_core::pairgen::Caps;
use crewseed_core::rules::{CostModel, RuleSet};
use serde::Deserialize;

use crate::CliError;

/// Contents of a `--rules` TOML file. Every table and key is optional and
/// falls back to the library defaults.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub rules: RuleSet,
    pub cost: CostModel,
    pub caps: CapsConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsConfig {
    pub max_nodes: u64,
    pub max_pairings: usize,
}

impl Default for CapsConfig {
    fn default() -> Self {
        let caps = Caps::default();
        CapsConfig {
            max_nodes: caps.max_nodes,
            max_pairings: caps.max_pairings,
        }
    }
}

impl From<CapsConfig> for Caps {
    fn from(c: CapsConfig) -> Caps {
        Caps {
            max_nodes: c.max_nodes,
            max_pairings: c.max_pairings,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.rules.validate().map_err(|e| e.to_string())?;
        cfg.cost.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    /// Loads `path`, or the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::parse(&text).map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })
    }
}
