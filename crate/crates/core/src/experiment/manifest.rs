use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::textunit::Unit;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStatus {
    pub run_id: String,
    pub doc_id: Option<String>,
    pub ok: bool,
    pub steps_completed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// What a command produced: the resolved config, per-chain status and a
/// hash of every file written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub config: serde_json::Value,
    pub dataset: String,
    pub model_decoding: String,
    pub deterministic: bool,
    pub unit: Unit,
    #[serde(default)]
    pub chains: Vec<ChainStatus>,
    pub files: Vec<FileEntry>,
}

pub fn now_unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory that records the hash of everything written to it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, ExperimentError> {
        fs::create_dir_all(root).map_err(|e| ExperimentError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), ExperimentError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(|e| ExperimentError::io(&path, e))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Write `manifest.json` (not itself listed) and return the inventory.
    pub fn finish<M: Serialize>(self, manifest: &M) -> Result<Vec<FileEntry>, ExperimentError> {
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| ExperimentError::io(&path, e))?;
        Ok(self.files)
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, ExperimentError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))
}

/// Files whose current hash differs from the inventory, or that are gone.
pub fn verify_inventory(dir: &Path, files: &[FileEntry]) -> Vec<String> {
    files
        .iter()
        .filter(|f| fs::read(dir.join(&f.path)).map_or(true, |b| sha256_hex(&b) != f.sha256))
        .map(|f| f.path.clone())
        .collect()
}
