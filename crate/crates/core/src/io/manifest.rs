//! Run manifests: config echo, timestamps and a content hash per output file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub config: RunConfig,
    /// Canonical configuration text, defaults included.
    pub config_text: String,
    pub started: String,
    pub finished: String,
    pub files: Vec<FileRecord>,
    pub diagnostics: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Writes `bytes` to `dir/name` and returns its record.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileRecord> {
    std::fs::write(dir.join(name), bytes)?;
    Ok(FileRecord {
        path: name.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

/// Re-hashes every listed file and checks that nothing else sits in `dir`.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let manifest = read_manifest(dir)?;
    for rec in &manifest.files {
        let bytes = std::fs::read(dir.join(&rec.path))?;
        if sha256_hex(&bytes) != rec.sha256 || bytes.len() as u64 != rec.bytes {
            return Err(Error::InvalidArgument(format!("manifest hash mismatch for {}", rec.path)));
        }
    }
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name != MANIFEST_FILE && !manifest.files.iter().any(|r| r.path == name) {
            return Err(Error::InvalidArgument(format!("{name} is not listed in the manifest")));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
