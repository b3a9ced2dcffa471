//! Structure similarity between generated and reference graphs.

mod ksi;
mod labeled;
mod novelty;
mod orbits;

use serde::{Deserialize, Serialize};

pub use ksi::{ksi, ksi_adjacency, ksi_sigma};
pub use labeled::{CanonicalForm, Label, LabeledGraph};
pub use novelty::{novel_unique, NoveltyReport};
pub use orbits::{orbit_counts, orbit_similarity, signature_similarity, OrbitSignature, ORBITS};

use crate::error::{Error, Result};

/// Mean pairwise similarities of one graph set against a reference set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub kernel_size: u32,
    pub mean_ksi: f64,
    pub mean_orbit_similarity: f64,
    pub novelty: NoveltyReport,
}

/// Averages KSI and orbit similarity over all (generated, reference) pairs.
pub fn compare_sets(generated: &[LabeledGraph], reference: &[LabeledGraph], kernel_size: u32) -> Result<CompareReport> {
    if reference.is_empty() {
        return Err(Error::EmptyInput("no reference graphs".into()));
    }
    let novelty = novel_unique(generated, reference)?;
    let ref_sigs: Vec<_> = reference.iter().map(orbit_counts).collect();
    let mut k = 0.0;
    let mut o = 0.0;
    for g in generated {
        let sig = orbit_counts(g);
        for (r, rs) in reference.iter().zip(&ref_sigs) {
            k += ksi(g, r, kernel_size)?;
            o += signature_similarity(&sig, rs, None);
        }
    }
    let pairs = (generated.len() * reference.len()) as f64;
    Ok(CompareReport {
        kernel_size,
        mean_ksi: k / pairs,
        mean_orbit_similarity: o / pairs,
        novelty,
    })
}
