use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use bms_core::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Record of one invocation. Output digests are reproducible; wall time is not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_ms: u128,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Digests of a file, or of every file below a directory keyed by its
/// relative path. Manifests are skipped.
pub fn digests(path: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    if path.is_dir() {
        let mut files = Vec::new();
        walk(path, &mut files)?;
        files.sort();
        for f in files {
            if f.file_name().is_some_and(|n| n.to_string_lossy().ends_with(MANIFEST_NAME)) {
                continue;
            }
            out.insert(f.display().to_string(), file_digest(&f)?);
        }
    } else if path.exists() {
        out.insert(path.display().to_string(), file_digest(path)?);
    }
    Ok(())
}

fn walk(dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let p = entry.map_err(|e| io_err(dir, e))?.path();
        if p.is_dir() {
            walk(&p, files)?;
        } else {
            files.push(p);
        }
    }
    Ok(())
}

/// `<dir>/manifest.json` for directory outputs, `<file>.manifest.json`
/// beside single files.
pub fn manifest_path(primary: &Path) -> PathBuf {
    if primary.is_dir() {
        primary.join(MANIFEST_NAME)
    } else {
        let mut name = primary.file_name().unwrap_or_default().to_os_string();
        name.push(".");
        name.push(MANIFEST_NAME);
        primary.with_file_name(name)
    }
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("bms".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        (
            "checkpoint".to_string(),
            format!("{} v{}", bms_core::numerics::checkpoint::FORMAT, bms_core::numerics::checkpoint::VERSION),
        ),
    ])
}
