//! Run artifacts: atomic file writes, content hashing, and the manifest that
//! makes every output directory reproducible from its recorded inputs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Writes via a sibling temporary file and an atomic rename, so readers never
/// observe a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::other("path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

/// Recorded inputs and outputs of one experiment run. Re-running the same
/// command line with the same seed and config hash reproduces every listed
/// file byte-for-byte (timestamps aside — they live only here, never in the
/// data files).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: String,
    pub config_sha256: Option<String>,
    pub master_seed: u64,
    pub crate_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn begin(command_line: String, config_sha256: Option<String>, master_seed: u64) -> Self {
        Self {
            command_line,
            config_sha256,
            master_seed,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            outputs: Vec::new(),
        }
    }

    /// Writes `bytes` atomically into the run directory and records its hash.
    pub fn emit(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Stamps the end time and writes `manifest.json` atomically.
    pub fn finish(mut self, dir: &Path) -> io::Result<()> {
        self.finished_unix = unix_now();
        let json = serde_json::to_string_pretty(&self).map_err(io::Error::other)?;
        write_atomic(&dir.join("manifest.json"), json.as_bytes())
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_round_trips_and_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.csv");
        write_atomic(&path, b"a,b\n1,2\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"a,b\n1,2\n");
        let leftovers: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_records_outputs_and_serializes() {
        let dir = tempfile::tempdir().unwrap();
        let mut manifest = RunManifest::begin("demo --seed 7".into(), None, 7);
        manifest.emit(dir.path(), "data.csv", b"x\n1\n").unwrap();
        manifest.finish(dir.path()).unwrap();
        let raw = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let parsed: RunManifest = serde_json::from_str(&raw).unwrap();
        assert_eq!(parsed.outputs.len(), 1);
        assert_eq!(parsed.outputs[0].file, "data.csv");
        assert_eq!(parsed.master_seed, 7);
    }
}
