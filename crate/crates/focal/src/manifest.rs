//! JSON-lines run manifest.
//!
//! Every command writes one manifest per run directory: a header entry with
//! the config digest and seed, then one entry per artifact in a fixed order.
//! No clocks or environment state are recorded, so identical (seed, config)
//! runs serialize byte-identically.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind")]
pub enum ManifestEntry {
    #[serde(rename = "run")]
    Run {
        command: String,
        config_digest: String,
        seed: u64,
    },
    #[serde(rename = "artifact")]
    Artifact {
        path: String,
        sha256: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        role: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        params: Option<serde_json::Value>,
    },
}

#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub entries: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config_digest: &str, seed: u64) -> Self {
        RunManifest {
            entries: vec![ManifestEntry::Run {
                command: command.to_string(),
                config_digest: config_digest.to_string(),
                seed,
            }],
        }
    }

    /// Record a file that already exists on disk, digesting its bytes.
    pub fn record_file(
        &mut self,
        run_dir: &Path,
        path: &Path,
        role: &str,
        params: Option<serde_json::Value>,
    ) -> Result<()> {
        let bytes = std::fs::read(path)?;
        let rel = path
            .strip_prefix(run_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.entries.push(ManifestEntry::Artifact {
            path: rel,
            sha256: sha256_hex(&bytes),
            role: Some(role.to_string()),
            params,
        });
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, run_dir: &Path) -> Result<PathBuf> {
        let path = run_dir.join("manifest.jsonl");
        let mut f = std::fs::File::create(&path)?;
        f.write_all(self.to_jsonl().as_bytes())?;
        Ok(path)
    }

    /// Digest of the serialized manifest.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_jsonl().as_bytes())
    }
}
