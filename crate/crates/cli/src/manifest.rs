//! Run manifests: what was run, on which inputs, and what it wrote.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a JSON value. Object keys serialize in sorted order, so equal
/// inputs always hash equally.
pub fn digest_json(v: &Value) -> String {
    sha256_hex(&serde_json::to_vec(v).expect("json value serializes"))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub inputs: Value,
    pub outputs: Vec<String>,
    pub observations: Value,
    pub started: String,
    pub finished: String,
}

pub struct Run {
    command: String,
    inputs: Value,
    started: DateTime<Utc>,
    outputs: Vec<PathBuf>,
    observations: serde_json::Map<String, Value>,
}

impl Run {
    pub fn start(command: &str, inputs: Value) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            started: Utc::now(),
            outputs: Vec::new(),
            observations: serde_json::Map::new(),
        }
    }

    pub fn observe(&mut self, key: &str, value: impl Serialize) {
        self.observations
            .insert(key.to_string(), serde_json::to_value(value).expect("observation serializes"));
    }

    /// Writes `bytes` under `dir` and records the path.
    pub fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path.clone());
        Ok(path)
    }

    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let stamp = |t: DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Millis, true);
        let m = RunManifest {
            config_digest: digest_json(&self.inputs),
            command: self.command,
            inputs: self.inputs,
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            observations: Value::Object(self.observations),
            started: stamp(self.started),
            finished: stamp(Utc::now()),
        };
        std::fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_vec_pretty(&m)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
