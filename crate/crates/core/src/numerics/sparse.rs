use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Compressed sparse row matrix used as a constant operand (neighbor
/// aggregation, pooling).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::shape("SparseMatrix::from_triplets", &[rows, cols], &[r, c]));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                t.set(r, c, t.get(r, c) + v);
            }
        }
        t
    }

    /// `self · x`.
    pub fn matmul(&self, x: &Tensor) -> Result<Tensor> {
        if x.rows() != self.cols {
            return Err(Error::shape("spmm", &[self.rows, self.cols], x.shape()));
        }
        let m = x.cols();
        let mut out = Tensor::zeros(self.rows, m);
        let data = out.data_mut();
        for r in 0..self.rows {
            let o = &mut data[r * m..(r + 1) * m];
            for (c, v) in self.row_entries(r) {
                for (a, b) in o.iter_mut().zip(x.row_slice(c)) {
                    *a += v * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · g`.
    pub fn t_matmul(&self, g: &Tensor) -> Result<Tensor> {
        if g.rows() != self.rows {
            return Err(Error::shape("spmm_t", &[self.rows, self.cols], g.shape()));
        }
        let m = g.cols();
        let mut out = Tensor::zeros(self.cols, m);
        let data = out.data_mut();
        for r in 0..self.rows {
            let gr = g.row_slice(r);
            for (c, v) in self.row_entries(r) {
                for (a, b) in data[c * m..(c + 1) * m].iter_mut().zip(gr) {
                    *a += v * b;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_product() {
        let s = SparseMatrix::from_triplets(3, 2, vec![(0, 1, 2.0), (2, 0, -1.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(s.nnz(), 2);
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let d = s.to_dense();
        assert_eq!(s.matmul(&x).unwrap(), d.matmul(&x).unwrap());
        let g = Tensor::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        assert_eq!(s.t_matmul(&g).unwrap(), d.t_matmul(&g).unwrap());
    }

    #[test]
    fn out_of_range_triplet() {
        assert!(SparseMatrix::from_triplets(1, 1, vec![(1, 0, 1.0)]).is_err());
    }
}
