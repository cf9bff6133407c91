//! Output directory bookkeeping: every file written is hashed into
//! `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Serialize)]
struct Entry {
    path: String,
    bytes: usize,
    sha256: String,
}

pub struct OutDir {
    root: PathBuf,
    entries: Vec<Entry>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| Failure::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), entries: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(Entry {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    /// Writes `manifest.json`, listing files in name order.
    pub fn finish(mut self) -> Result<PathBuf, Failure> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let json =
            serde_json::to_string_pretty(&serde_json::json!({ "files": self.entries })).expect("manifest serializes");
        let path = self.path("manifest.json");
        fs::write(&path, json + "\n").map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
