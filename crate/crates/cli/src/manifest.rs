//! Run manifests: what went into a run, identified by a hash every output
//! file carries.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use confront_core::normalize::NORMALIZATION_TABLE_VERSION;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// The deterministic part of a manifest; its hash identifies the run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<InputFile>,
    pub methods: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub normalization_table: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub manifest_hash: String,
    #[serde(flatten)]
    pub spec: RunSpec,
    pub outputs: Vec<OutputFile>,
    /// Excluded from the hash.
    pub started_at: String,
    pub finished_at: String,
}

impl RunSpec {
    pub fn new(command: &str) -> Self {
        RunSpec {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs: Vec::new(),
            methods: Vec::new(),
            parameters: BTreeMap::new(),
            normalization_table: NORMALIZATION_TABLE_VERSION,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(InputFile {
            role: role.to_string(),
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn param(&mut self, name: &str, value: impl Into<Value>) {
        self.parameters.insert(name.to_string(), value.into());
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("manifest serializes"))
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_follows_parameters() {
        let mut a = RunSpec::new("extract");
        a.param("k", 7);
        let mut b = RunSpec::new("extract");
        b.param("k", 7);
        assert_eq!(a.hash(), b.hash());
        b.param("k", 6);
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
