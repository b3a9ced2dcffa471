use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::labeled::{CanonicalForm, LabeledGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoveltyReport {
    pub generated: usize,
    pub distinct: usize,
    pub novel_distinct: usize,
    /// distinct / generated
    pub unique: f64,
    /// distinct graphs absent from training / distinct
    pub novel: f64,
}

/// Distinctness and out-of-dataset fractions of generated graphs, up to
/// labeled isomorphism.
pub fn novel_unique(generated: &[LabeledGraph], training: &[LabeledGraph]) -> Result<NoveltyReport> {
    if generated.is_empty() {
        return Err(Error::EmptyInput("no generated graphs".into()));
    }
    let seen: BTreeSet<CanonicalForm> = training.iter().map(LabeledGraph::canonical_form).collect();
    let distinct: BTreeSet<CanonicalForm> = generated.iter().map(LabeledGraph::canonical_form).collect();
    let novel_distinct = distinct.iter().filter(|f| !seen.contains(f)).count();
    Ok(NoveltyReport {
        generated: generated.len(),
        distinct: distinct.len(),
        novel_distinct,
        unique: distinct.len() as f64 / generated.len() as f64,
        novel: novel_distinct as f64 / distinct.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(edges: &[(usize, usize)]) -> LabeledGraph {
        LabeledGraph::unlabeled(3, edges.iter().copied()).unwrap()
    }

    #[test]
    fn fractions() {
        let g1 = g(&[(0, 1)]);
        let g2 = g(&[(0, 1), (1, 2)]);
        let g2b = g(&[(0, 2), (1, 2)]);
        let r = novel_unique(&[g1.clone(), g2, g2b], std::slice::from_ref(&g1)).unwrap();
        assert_eq!((r.unique, r.novel), (2.0 / 3.0, 0.5));
        let r = novel_unique(&[g1.clone(), g1.clone()], &[g1]).unwrap();
        assert_eq!(r.novel, 0.0);
        assert!(novel_unique(&[], &[]).is_err());
    }
}
