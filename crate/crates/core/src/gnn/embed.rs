use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::seed::{fnv1a64, splitmix64};
use crate::space::{AttributeSpace, NodeId};

/// Initial attribute vectors, one row per node id of an attribute space.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub table: Tensor,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    pub fn len(&self) -> usize {
        self.table.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.table.rows() == 0
    }

    pub fn vector(&self, id: NodeId) -> &[f64] {
        self.table.row_slice(id.index())
    }

    /// Coordinates come from a counter hash of `(field, token, seed, index)`,
    /// uniform on `[-√(3/d), √(3/d)]` so the expected squared norm is 1.
    pub fn hashed(space: &AttributeSpace, dim: usize, seed: u64) -> Self {
        let scale = (3.0 / dim as f64).sqrt();
        let mut data = Vec::with_capacity(space.len() * dim);
        for tok in space.tokens() {
            let field = &space.fields()[tok.field_id];
            let key = fnv1a64(format!("{field}\u{1f}{}", tok.value_token).as_bytes()) ^ splitmix64(seed);
            for i in 0..dim {
                let bits = splitmix64(key.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
                let u = (bits >> 11) as f64 / (1u64 << 53) as f64;
                data.push((2.0 * u - 1.0) * scale);
            }
        }
        Self {
            table: Tensor::new(vec![space.len(), dim], data).expect("rows × dim"),
        }
    }

    /// Uses externally produced vectors keyed by node label (`field=token`).
    pub fn imported(space: &AttributeSpace, vectors: &BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let dim = vectors.values().next().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(space.len() * dim);
        for id in space.ids() {
            let label = space.label(id);
            let v = vectors.get(&label).ok_or(Error::MissingEmbedding(label))?;
            if v.len() != dim {
                return Err(Error::shape("imported embedding", &[dim], &[v.len()]));
            }
            data.extend_from_slice(v);
        }
        Ok(Self {
            table: Tensor::new(vec![space.len(), dim], data)?,
        })
    }

    /// Reads a JSON object mapping node labels to vectors.
    pub fn import_file(space: &AttributeSpace, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let vectors: BTreeMap<String, Vec<f64>> = serde_json::from_str(&text)?;
        Self::imported(space, &vectors)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| dot / (na * nb))
}
