//! Service configuration: a TOML file, then environment overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tailoredsec_core::session::AllocationMode;
use thiserror::Error;

pub const ENV_PREFIX: &str = "TAILOREDSEC_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path} does not parse: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value for {key}: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApiConfig {
    pub port: u16,
    /// Content bank file; the bundled bank when absent.
    pub content: Option<PathBuf>,
    /// Event log file.
    pub store: PathBuf,
    pub alloc: AllocationMode,
    /// Value expected in the `x-admin-secret` header. Export is refused
    /// when unset.
    pub admin_secret: Option<String>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            content: None,
            store: PathBuf::from("tailoredsec-events.jsonl"),
            alloc: AllocationMode::Alternating,
            admin_secret: None,
        }
    }
}

impl ApiConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Applies `TAILOREDSEC_PORT`, `TAILOREDSEC_CONTENT`, `TAILOREDSEC_STORE`,
    /// `TAILOREDSEC_ALLOC` and `TAILOREDSEC_ADMIN_SECRET` from `vars`.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        for (key, value) in vars {
            let Some(name) = key.as_ref().strip_prefix(ENV_PREFIX) else { continue };
            let value: String = value.into();
            let invalid = |message: String| ConfigError::Invalid {
                key: key.as_ref().to_string(),
                message,
            };
            match name {
                "PORT" => self.port = value.parse().map_err(|e: std::num::ParseIntError| invalid(e.to_string()))?,
                "CONTENT" => self.content = Some(PathBuf::from(value)),
                "STORE" => self.store = PathBuf::from(value),
                "ALLOC" => self.alloc = value.parse().map_err(|e: String| invalid(e))?,
                "ADMIN_SECRET" => self.admin_secret = Some(value),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn apply_process_env(&mut self) -> Result<(), ConfigError> {
        self.apply_env(std::env::vars())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env() {
        let mut c = ApiConfig::from_toml_str(
            "port = 9000\nstore = \"/tmp/x.jsonl\"\nalloc = \"fixed-quota:40\"\n",
            "test",
        )
        .unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.alloc, AllocationMode::FixedQuota { first_n_to_traditional: 40 });
        c.apply_env([("TAILOREDSEC_PORT", "9100"), ("TAILOREDSEC_ADMIN_SECRET", "s"), ("HOME", "/root")])
            .unwrap();
        assert_eq!(c.port, 9100);
        assert_eq!(c.admin_secret.as_deref(), Some("s"));
        assert_eq!(c.store, PathBuf::from("/tmp/x.jsonl"));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ApiConfig::from_toml_str("prot = 1\n", "test").is_err());
    }

    #[test]
    fn bad_env_value() {
        let mut c = ApiConfig::default();
        let err = c.apply_env([("TAILOREDSEC_ALLOC", "sometimes")]).unwrap_err();
        assert!(err.to_string().contains("TAILOREDSEC_ALLOC"));
    }
}
