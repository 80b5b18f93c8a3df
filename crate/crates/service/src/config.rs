use std::path::{Path, PathBuf};

use multiballot_core::board::BoardConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("environment variable {name}: {reason}")]
    Env { name: &'static str, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    pub data_dir: PathBuf,
    /// `ristretto255` or `schnorr-test`.
    pub group: String,
    /// JSON board configuration (tallier roster, roll and HC keys) used
    /// when the log is empty.
    pub genesis: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8420,
            data_dir: PathBuf::from("board-data"),
            group: "ristretto255".into(),
            genesis: None,
        }
    }
}

impl ServiceConfig {
    /// Defaults, then the optional TOML file, then `MULTIBALLOT_*` variables.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                toml::from_str(&text).map_err(|e| ConfigError::Parse {
                    path: p.to_path_buf(),
                    reason: e.to_string(),
                })?
            }
            None => ServiceConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = var("MULTIBALLOT_PORT") {
            self.port = v.parse().map_err(|e: std::num::ParseIntError| ConfigError::Env {
                name: "MULTIBALLOT_PORT",
                reason: e.to_string(),
            })?;
        }
        if let Some(v) = var("MULTIBALLOT_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("MULTIBALLOT_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = var("MULTIBALLOT_GROUP") {
            self.group = v;
        }
        if let Some(v) = var("MULTIBALLOT_GENESIS") {
            self.genesis = Some(v.into());
        }
        Ok(())
    }

    pub fn load_genesis(&self) -> Result<Option<BoardConfig>, ConfigError> {
        let Some(p) = &self.genesis else { return Ok(None) };
        let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.clone(),
            source,
        })?;
        serde_json::from_str(&text).map(Some).map_err(|e| ConfigError::Parse {
            path: p.clone(),
            reason: e.to_string(),
        })
    }
}
