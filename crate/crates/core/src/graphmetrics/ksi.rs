use crate::error::{Error, Result};

use super::labeled::LabeledGraph;

/// Kernel width for a given kernel size: `0.3·((size − 1)·0.5 − 1) + 0.8`.
pub fn ksi_sigma(kernel_size: u32) -> f64 {
    0.3 * ((f64::from(kernel_size) - 1.0) * 0.5 - 1.0) + 0.8
}

/// Gaussian kernel on the Frobenius distance between binary adjacency
/// matrices: `exp(−‖E1 − E2‖² / (2σ²))`. The smaller matrix is zero-padded,
/// so node order matters; both graphs should use the canonical node-type
/// order. 1 means identical.
pub fn ksi(g1: &LabeledGraph, g2: &LabeledGraph, kernel_size: u32) -> Result<f64> {
    ksi_adjacency(&g1.adjacency(), &g2.adjacency(), kernel_size)
}

pub fn ksi_adjacency(a: &[Vec<bool>], b: &[Vec<bool>], kernel_size: u32) -> Result<f64> {
    let sigma = ksi_sigma(kernel_size);
    if sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!("kernel size {kernel_size} gives σ = {sigma}")));
    }
    let n = a.len().max(b.len());
    let at = |m: &[Vec<bool>], i: usize, j: usize| m.get(i).and_then(|r| r.get(j)).copied().unwrap_or(false);
    let mut d2 = 0usize;
    for i in 0..n {
        for j in 0..n {
            if at(a, i, j) != at(b, i, j) {
                d2 += 1;
            }
        }
    }
    Ok((-(d2 as f64) / (2.0 * sigma * sigma)).exp())
}
