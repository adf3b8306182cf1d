//! Service configuration: a JSON file plus environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use route_receipt::store::{ConfigError, StoreConfig};
use serde::{Deserialize, Serialize};

pub const ENV_LISTEN: &str = "RR_LISTEN";
pub const ENV_POLICY_PATH: &str = "RR_POLICY_PATH";
pub const ENV_SCENARIO_PATH: &str = "RR_SCENARIO_PATH";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    #[serde(default)]
    pub store: StoreConfig,
    /// Redaction policy file. The built-in default policy when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_path: Option<PathBuf>,
    /// Simulator scenario file. An empty scenario when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fast_tiers: Vec<String>,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8787))
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: default_listen(),
            store: StoreConfig::default(),
            policy_path: None,
            scenario_path: None,
            fast_tiers: Vec::new(),
        }
    }
}

impl ServiceConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))
    }

    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
                    path: path.to_owned(),
                    detail: e.to_string(),
                })?;
                ServiceConfig::from_json(&text)?
            }
            None => ServiceConfig::default(),
        };
        config.with_env(std::env::vars())
    }

    /// Applies `RR_LISTEN`, `RR_POLICY_PATH`, `RR_SCENARIO_PATH` and the
    /// store's own variables.
    pub fn with_env(mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let vars: Vec<(String, String)> = vars.into_iter().collect();
        for (key, value) in &vars {
            match key.as_str() {
                ENV_LISTEN => {
                    self.listen = value
                        .parse()
                        .map_err(|e| ConfigError::Malformed(format!("{ENV_LISTEN}: {e}")))?
                }
                ENV_POLICY_PATH => self.policy_path = Some(PathBuf::from(value)),
                ENV_SCENARIO_PATH => self.scenario_path = Some(PathBuf::from(value)),
                _ => {}
            }
        }
        self.store = self.store.with_env(vars)?;
        Ok(self)
    }
}
