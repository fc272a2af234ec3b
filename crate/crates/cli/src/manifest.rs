//! Run manifest: what each stage read and wrote, keyed by content hashes.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use techprox_core::corpus::write_atomic;

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".techprox.lock";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub version: u32,
    pub params_hash: String,
    /// Input path (output-relative or absolute) to SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory, to SHA-256.
    pub outputs: BTreeMap<String, String>,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| CliError::artifact(path, format!("unreadable manifest: {e}")))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(&dir.join(MANIFEST_FILE), &bytes)?;
        Ok(())
    }

    /// True when the stage's recorded outputs are all on disk unchanged.
    pub fn outputs_intact(&self, dir: &Path, stage: &str) -> bool {
        self.stages.get(stage).is_some_and(|r| {
            r.outputs.iter().all(|(rel, hash)| hash_file(&dir.join(rel)).is_ok_and(|h| h == *hash))
        })
    }

    /// Every output path recorded by any stage.
    pub fn all_outputs(&self) -> impl Iterator<Item = &str> {
        self.stages.values().flat_map(|r| r.outputs.keys().map(String::as_str))
    }
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    Ok(hash_bytes(&fs::read(path)?))
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Exclusive hold on an output directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                use std::io::Write;
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Opens an artifact for reading with the path in the error.
pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::artifact(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = RunLock::acquire(dir.path()).unwrap();
        assert!(matches!(RunLock::acquire(dir.path()), Err(CliError::Locked(_))));
        drop(lock);
        RunLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn intact_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "x\n").unwrap();
        let mut m = Manifest::default();
        let mut r = StageRecord::default();
        r.outputs.insert("a.csv".into(), hash_file(&dir.path().join("a.csv")).unwrap());
        m.stages.insert("s".into(), r);
        assert!(m.outputs_intact(dir.path(), "s"));
        fs::write(dir.path().join("a.csv"), "y\n").unwrap();
        assert!(!m.outputs_intact(dir.path(), "s"));
        assert!(!m.outputs_intact(dir.path(), "other"));
        m.save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path()).unwrap(), m);
    }
}
