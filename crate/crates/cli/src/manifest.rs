use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_SCHEMA: &str = "qpv.manifest/1";

/// Hex SHA-256 of the canonical config bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Written next to every command's outputs. Only the two timestamps vary
/// between repeated runs of the same config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, config_bytes: &[u8], seed: u64) -> Self {
        RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: command.into(),
            config_hash: config_hash(config_bytes),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix_ms: unix_millis(),
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_unix_ms = unix_millis();
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}
