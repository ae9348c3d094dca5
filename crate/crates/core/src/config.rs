//! Optional TOML configuration.
//!
//! ```toml
//! cache_budget_mib = 512
//!
//! [host]
//! handshake_timeout_s = 10
//! call_timeout_s = 300
//! kill_grace_s = 2
//!
//! [[importers]]
//! name = "xyz"
//! extensions = ["xyz"]
//! command = ["mdflow-refhost", "xyz"]
//! ```

use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::io::ImporterRegistry;
use crate::script::{ExternalImporter, ExternalImporterConfig, HostOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostConfig {
    pub handshake_timeout_s: Option<f64>,
    pub call_timeout_s: Option<f64>,
    pub kill_grace_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub cache_budget_mib: Option<u64>,
    #[serde(default)]
    pub host: HostConfig,
    #[serde(default)]
    pub importers: Vec<ExternalImporterConfig>,
}

fn seconds(v: Option<f64>, default: Duration, key: &str) -> Result<Duration, ConfigError> {
    match v {
        None => Ok(default),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Duration::from_secs_f64(s)),
        Some(s) => Err(ConfigError::Invalid(format!("host.{key} must be positive, got {s}"))),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text)?;
        c.host_options()?;
        for imp in &c.importers {
            if imp.command.is_empty() {
                return Err(ConfigError::Invalid(format!("importer `{}` has an empty command", imp.name)));
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn host_options(&self) -> Result<HostOptions, ConfigError> {
        let d = HostOptions::default();
        Ok(HostOptions {
            handshake_timeout: seconds(self.host.handshake_timeout_s, d.handshake_timeout, "handshake_timeout_s")?,
            call_timeout: seconds(self.host.call_timeout_s, d.call_timeout, "call_timeout_s")?,
            kill_grace: seconds(self.host.kill_grace_s, d.kill_grace, "kill_grace_s")?,
        })
    }

    /// Built-in importers followed by the configured external ones.
    pub fn registry(&self) -> ImporterRegistry {
        let mut r = ImporterRegistry::with_builtin();
        if let Some(mib) = self.cache_budget_mib {
            r.set_cache_budget((mib as usize).saturating_mul(1 << 20));
        }
        let opts = self.host_options().unwrap_or_default();
        for imp in &self.importers {
            r.register(Box::new(ExternalImporter::new(imp.clone(), opts)));
        }
        r
    }
}
