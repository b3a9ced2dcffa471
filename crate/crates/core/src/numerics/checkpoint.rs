//! Parameter files: a little-endian `f64` payload plus a JSON index.
//!
//! `<stem>.bin` holds every tensor's values back to back in name order;
//! `<stem>.json` lists name, shape, byte offset and value count.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tape::Params;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const FORMAT: &str = "bms-params";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointIndex {
    pub format: String,
    pub version: u32,
    pub entries: Vec<IndexEntry>,
    /// Free-form model description (layer sizes, vocabularies).
    #[serde(default)]
    pub meta: serde_json::Value,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn encode(params: &Params, meta: serde_json::Value) -> (Vec<u8>, CheckpointIndex) {
    let mut bytes = Vec::with_capacity(params.num_values() * 8);
    let mut entries = Vec::with_capacity(params.len());
    for (name, t) in params.iter() {
        entries.push(IndexEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            offset: bytes.len() as u64,
            len: t.len() as u64,
        });
        for v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let index = CheckpointIndex {
        format: FORMAT.into(),
        version: VERSION,
        entries,
        meta,
    };
    (bytes, index)
}

pub fn decode(bytes: &[u8], index: &CheckpointIndex) -> Result<Params> {
    if index.format != FORMAT || index.version != VERSION {
        return Err(Error::Parse(format!(
            "unsupported checkpoint {} v{}",
            index.format, index.version
        )));
    }
    let mut params = Params::new();
    for e in &index.entries {
        let start = e.offset as usize;
        let end = start + 8 * e.len as usize;
        let chunk = bytes
            .get(start..end)
            .ok_or_else(|| Error::Parse(format!("checkpoint payload too short for {}", e.name)))?;
        let data = chunk
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        params.insert(&e.name, Tensor::new(e.shape.clone(), data)?);
    }
    Ok(params)
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn save(stem: &Path, params: &Params, meta: serde_json::Value) -> Result<()> {
    let (bin, json) = paths(stem);
    let (bytes, index) = encode(params, meta);
    std::fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    std::fs::write(&json, serde_json::to_string_pretty(&index)?).map_err(|e| Error::io(&json, e))?;
    Ok(())
}

pub fn load(stem: &Path) -> Result<(Params, serde_json::Value)> {
    let (bin, json) = paths(stem);
    let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let index: CheckpointIndex = serde_json::from_str(&text)?;
    let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    Ok((decode(&bytes, &index)?, index.meta))
}
