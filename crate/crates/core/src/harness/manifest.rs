//! Per-run manifest and atomic file writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pending,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_hash: String,
    /// File role (`transcript`, `results`, `metrics`, ...) to a path
    /// relative to the run directory.
    pub files: BTreeMap<String, String>,
    pub status: RunStatus,
    pub failure_reason: Option<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REQUIRED_FILES: [&str; 3] = ["transcript", "results", "metrics"];

impl RunManifest {
    pub fn pending(run_id: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            run_id: run_id.into(),
            config_hash: config_hash.into(),
            files: BTreeMap::new(),
            status: RunStatus::Pending,
            failure_reason: None,
        }
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&run_dir.join(MANIFEST_FILE), text.as_bytes())
    }

    /// Completed with every required file present and non-empty.
    pub fn is_complete(&self, run_dir: &Path) -> bool {
        self.status == RunStatus::Completed
            && REQUIRED_FILES.iter().all(|role| {
                self.files
                    .get(*role)
                    .and_then(|f| std::fs::metadata(run_dir.join(f)).ok())
                    .is_some_and(|m| m.len() > 0)
            })
    }

    pub fn path_of(&self, run_dir: &Path, role: &str) -> Option<PathBuf> {
        self.files.get(role).map(|f| run_dir.join(f))
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
