use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Angle in radians per row; `None` where either vector is zero.
    pub angles: Vec<Option<f64>>,
    pub mean: f64,
    /// Counts over `bins` equal slices of `[0, π]`.
    pub histogram: Vec<usize>,
    pub zero_vectors: usize,
}

/// Row-wise angle between two embedding tables.
pub fn embedding_drift(initial: &Tensor, trained: &Tensor, bins: usize) -> Result<DriftReport> {
    initial.same_shape(trained, "embedding_drift")?;
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    let mut angles = Vec::with_capacity(initial.rows());
    let mut histogram = vec![0; bins];
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..initial.rows() {
        let a = crate::gnn::cosine(initial.row_slice(i), trained.row_slice(i)).map(|c| c.clamp(-1.0, 1.0).acos());
        if let Some(t) = a {
            let b = ((t / std::f64::consts::PI) * bins as f64) as usize;
            histogram[b.min(bins - 1)] += 1;
            sum += t;
            count += 1;
        }
        angles.push(a);
    }
    Ok(DriftReport {
        zero_vectors: angles.len() - count,
        mean: if count == 0 { f64::NAN } else { sum / count as f64 },
        angles,
        histogram,
    })
}
