//! Run metadata and error records, written as JSON next to the outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::KvConfig;
use crate::error::{LabError, LabResult};

pub const METADATA_FILE: &str = "metadata.json";
pub const ERROR_FILE: &str = "error.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective configuration, seed override applied.
    pub config: BTreeMap<String, String>,
    /// SHA-256 of [`KvConfig::echo`].
    pub config_hash: String,
    pub seed: u64,
    pub seed_overridden: bool,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub timestamp: u64,
    pub threads: usize,
    pub outputs: Vec<String>,
}

pub fn config_hash(cfg: &KvConfig) -> String {
    hex::encode(Sha256::digest(cfg.echo().as_bytes()))
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

impl Metadata {
    pub fn new(command: &str, cfg: &KvConfig, seed: u64, seed_overridden: bool, threads: usize) -> Self {
        Metadata {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: cfg.entries().clone(),
            config_hash: config_hash(cfg),
            seed,
            seed_overridden,
            timestamp: timestamp(),
            threads,
            outputs: Vec::new(),
        }
    }

    /// The configuration as text that parses back to the same settings.
    pub fn config_text(&self) -> String {
        self.config.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&LabError> for ErrorRecord {
    fn from(e: &LabError) -> Self {
        ErrorRecord { kind: e.kind().into(), message: e.to_string(), exit_code: e.exit_code() }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_layout_but_not_values() {
        let a = KvConfig::parse("seed = 1\nspec = point(value=1)").unwrap();
        let b = KvConfig::parse("# x\nspec=point(value=1)\n\nseed =1").unwrap();
        let c = KvConfig::parse("seed = 2\nspec = point(value=1)").unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn metadata_echo_round_trips() {
        let cfg = KvConfig::parse("seed = 1\nspec = point(value=1)").unwrap();
        let m = Metadata::new("sample", &cfg, 1, false, 1);
        let back: Metadata = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(KvConfig::parse(&m.config_text()).unwrap(), cfg);
    }
}
