use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::report::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one output directory.
///
/// Two runs whose manifests agree outside `timestamp_unix` write identical CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, program name excluded.
    pub args: Vec<String>,
    pub scenario: Option<PathBuf>,
    pub seed: u64,
    pub policies: Vec<String>,
    pub out: PathBuf,
    pub timestamp_unix: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, scenario: Option<PathBuf>, seed: u64, policies: Vec<String>, out: PathBuf) -> Self {
        RunManifest {
            command: command.to_string(),
            args,
            scenario,
            seed,
            policies,
            out,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE))?)?)
    }
}
