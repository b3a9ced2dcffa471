use std::collections::BTreeMap;
use std::sync::Arc;

use rand_distr::{Distribution, Normal};

use super::sparse::SparseMatrix;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-12;

/// Named trainable tensors. Also used for gradients and optimizer moments,
/// which share the parameters' names and shapes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    map: BTreeMap<String, Tensor>,
}

pub type Grads = Params;

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.map.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.map.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.map.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.map.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn num_values(&self) -> usize {
        self.map.values().map(Tensor::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            map: self
                .map
                .iter()
                .map(|(k, v)| {
                    let z = Tensor::new(v.shape().to_vec(), vec![0.0; v.len()]).expect("same shape");
                    (k.clone(), z)
                })
                .collect(),
        }
    }

    /// Glorot-uniform initialization.
    pub fn init_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut impl rand::Rng) {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let t = Tensor::from_fn(rows, cols, |_, _| rng.random_range(-limit..limit));
        self.insert(name, t);
    }

    pub fn init_normal(&mut self, name: &str, rows: usize, cols: usize, std: f64, rng: &mut impl rand::Rng) {
        let n = Normal::new(0.0, std).expect("positive std");
        let t = Tensor::from_fn(rows, cols, |_, _| n.sample(rng));
        self.insert(name, t);
    }

    pub fn init_zeros(&mut self, name: &str, rows: usize, cols: usize) {
        self.insert(name, Tensor::zeros(rows, cols));
    }

    /// Largest absolute entry over all tensors.
    pub fn max_abs(&self) -> f64 {
        self.map
            .values()
            .flat_map(|t| t.data().iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    MeanRows(Var),
    Sum(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    Reshape(Var),
    SpMM(Arc<SparseMatrix>, Var),
    SoftmaxCe {
        logits: Var,
        classes: Vec<usize>,
        weights: Vec<f64>,
        probs: Tensor,
    },
    Bce {
        prob: Var,
        target: Tensor,
        weights: Tensor,
    },
    GaussianKl(Var, Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records one forward pass for reverse-mode differentiation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: BTreeMap<String, Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var], name: &'static str) -> Result<Var> {
        if !value.is_finite() && inputs.iter().all(|v| self.value(*v).is_finite()) {
            return Err(Error::Numeric(format!("{name} produced a non-finite value")));
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value, op, needs_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Loads a named parameter; repeated calls return the same variable.
    pub fn param(&mut self, params: &Params, name: &str) -> Result<Var> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let t = params
            .get(name)
            .ok_or_else(|| Error::NotFound(format!("parameter {name}")))?
            .clone();
        self.nodes.push(Node {
            value: t,
            op: Op::Leaf,
            needs_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push(out, Op::MatMul(a, b), &[a, b], "matmul")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).same_shape(self.value(b), "add")?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(out, Op::Add(a, b), &[a, b], "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).same_shape(self.value(b), "sub")?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(out, Op::Sub(a, b), &[a, b], "sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).same_shape(self.value(b), "mul")?;
        let out = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b), &[a, b], "mul")
    }

    /// Adds a `1 × c` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(bias));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(Error::shape("add_row", x.shape(), b.shape()));
        }
        let c = x.cols();
        let mut out = x.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v += b.data()[i % c];
        }
        self.push(out, Op::AddRow(a, bias), &[a, bias], "add_row")
    }

    /// `x · w + b`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let h = self.matmul(x, w)?;
        self.add_row(h, b)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x * s);
        self.push(out, Op::Scale(a, s), &[a], "scale")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a), &[a], "relu")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a), &[a], "sigmoid")
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a), &[a], "tanh")
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::exp);
        self.push(out, Op::Exp(a), &[a], "exp")
    }

    /// Column means, `1 × c`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        let (r, c) = (x.rows(), x.cols());
        if r == 0 {
            return Err(Error::shape("mean_rows", x.shape(), &[1, c]));
        }
        let mut out = Tensor::zeros(1, c);
        for i in 0..r {
            for (o, v) in out.data_mut().iter_mut().zip(x.row_slice(i)) {
                *o += v;
            }
        }
        out.scale_assign(1.0 / r as f64);
        self.push(out, Op::MeanRows(a), &[a], "mean_rows")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a), &[a], "sum")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("concat of nothing".into()))?;
        let r = self.value(*first).rows();
        for p in parts {
            if self.value(*p).rows() != r {
                return Err(Error::shape("concat_cols", self.value(*first).shape(), self.value(*p).shape()));
            }
        }
        let total: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut data = Vec::with_capacity(r * total);
        for i in 0..r {
            for p in parts {
                data.extend_from_slice(self.value(*p).row_slice(i));
            }
        }
        let out = Tensor::new(vec![r, total], data)?;
        self.push(out, Op::ConcatCols(parts.to_vec()), parts, "concat_cols")
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("concat of nothing".into()))?;
        let c = self.value(*first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let t = self.value(*p);
            if t.cols() != c {
                return Err(Error::shape("concat_rows", self.value(*first).shape(), t.shape()));
            }
            rows += t.rows();
            data.extend_from_slice(t.data());
        }
        let out = Tensor::new(vec![rows, c], data)?;
        self.push(out, Op::ConcatRows(parts.to_vec()), parts, "concat_rows")
    }

    /// Embedding lookup: row `idx[i]` of `a` becomes row `i`.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let x = self.value(a);
        let c = x.cols();
        if let Some(&bad) = idx.iter().find(|&&i| i >= x.rows()) {
            return Err(Error::shape("gather_rows", x.shape(), &[bad]));
        }
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in idx {
            data.extend_from_slice(x.row_slice(i));
        }
        let out = Tensor::new(vec![idx.len(), c], data)?;
        self.push(out, Op::GatherRows(a, idx.to_vec()), &[a], "gather_rows")
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        let out = self.value(a).clone().reshape(vec![rows, cols])?;
        self.push(out, Op::Reshape(a), &[a], "reshape")
    }

    /// Constant sparse matrix times a variable.
    pub fn spmm(&mut self, s: &Arc<SparseMatrix>, a: Var) -> Result<Var> {
        let out = s.matmul(self.value(a))?;
        self.push(out, Op::SpMM(Arc::clone(s), a), &[a], "spmm")
    }

    /// Mean over rows of `−log softmax(logits)[class]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, classes: &[usize]) -> Result<Var> {
        let n = classes.len().max(1) as f64;
        let w = vec![1.0 / n; classes.len()];
        self.softmax_cross_entropy_weighted(logits, classes, &w)
    }

    /// `Σ_i w_i · (−log softmax(logits_i)[class_i])`.
    pub fn softmax_cross_entropy_weighted(&mut self, logits: Var, classes: &[usize], weights: &[f64]) -> Result<Var> {
        let x = self.value(logits);
        let (r, c) = (x.rows(), x.cols());
        if classes.len() != r || weights.len() != r {
            return Err(Error::shape("softmax_cross_entropy", x.shape(), &[classes.len()]));
        }
        if let Some(&bad) = classes.iter().find(|&&k| k >= c) {
            return Err(Error::shape("softmax_cross_entropy", x.shape(), &[r, bad]));
        }
        let mut probs = Tensor::zeros(r, c);
        let mut loss = 0.0;
        for i in 0..r {
            let row = x.row_slice(i);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
            let lse = m + z.ln();
            for (j, v) in row.iter().enumerate() {
                probs.set(i, j, (v - lse).exp());
            }
            loss += weights[i] * (lse - row[classes[i]]);
        }
        let op = Op::SoftmaxCe {
            logits,
            classes: classes.to_vec(),
            weights: weights.to_vec(),
            probs,
        };
        self.push(Tensor::scalar(loss), op, &[logits], "softmax_cross_entropy")
    }

    /// Mean binary cross-entropy with clamped probabilities.
    pub fn bce(&mut self, prob: Var, target: &Tensor) -> Result<Var> {
        let n = target.len().max(1) as f64;
        let w = target.map(|_| 1.0 / n);
        self.bce_weighted(prob, target, &w)
    }

    /// `Σ w · (−t log p − (1−t) log(1−p))`, `p` clamped to
    /// `[PROB_CLAMP, 1 − PROB_CLAMP]`.
    pub fn bce_weighted(&mut self, prob: Var, target: &Tensor, weights: &Tensor) -> Result<Var> {
        let p = self.value(prob);
        p.same_shape(target, "bce")?;
        p.same_shape(weights, "bce")?;
        let mut loss = 0.0;
        for ((&pv, &t), &w) in p.data().iter().zip(target.data()).zip(weights.data()) {
            let q = pv.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            loss -= w * (t * q.ln() + (1.0 - t) * (1.0 - q).ln());
        }
        let op = Op::Bce {
            prob,
            target: target.clone(),
            weights: weights.clone(),
        };
        self.push(Tensor::scalar(loss), op, &[prob], "bce")
    }

    /// KL divergence from `N(mu, exp(logvar))` to the standard normal,
    /// summed over all entries.
    pub fn gaussian_kl(&mut self, mu: Var, logvar: Var) -> Result<Var> {
        let (m, lv) = (self.value(mu), self.value(logvar));
        m.same_shape(lv, "gaussian_kl")?;
        let kl: f64 = m
            .data()
            .iter()
            .zip(lv.data())
            .map(|(&u, &l)| 0.5 * (u * u + l.exp() - 1.0 - l))
            .sum();
        self.push(Tensor::scalar(kl), Op::GaussianKl(mu, logvar), &[mu, logvar], "gaussian_kl")
    }

    /// Reverse pass from a scalar `loss`. Returns a gradient for every entry
    /// of `params`; parameters not reached from the loss get zeros.
    pub fn backward(&self, loss: Var, params: &Params) -> Result<Grads> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::shape("backward", lv.shape(), &[1, 1]));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        let mut out = params.zeros_like();
        for (name, t) in out.iter_mut() {
            if let Some(&v) = self.params.get(name) {
                if let Some(g) = grads.get(v.0).and_then(Option::as_ref) {
                    *t = g.clone();
                }
            }
        }
        Ok(out)
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let mut acc = |v: Var, delta: Tensor| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(t) => t.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (x, w) = (self.value(*a), self.value(*b));
                if self.nodes[a.0].needs_grad {
                    acc(*a, g.matmul_t(w)?);
                }
                if self.nodes[b.0].needs_grad {
                    acc(*b, x.t_matmul(g)?);
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                acc(*a, g.zip_map(self.value(*b), |x, y| x * y));
                acc(*b, g.zip_map(self.value(*a), |x, y| x * y));
            }
            Op::AddRow(a, b) => {
                acc(*a, g.clone());
                let c = g.cols();
                let mut gb = Tensor::zeros(1, c);
                for i in 0..g.rows() {
                    for (o, v) in gb.data_mut().iter_mut().zip(g.row_slice(i)) {
                        *o += v;
                    }
                }
                acc(*b, gb);
            }
            Op::Scale(a, s) => acc(*a, g.map(|v| v * s)),
            Op::Relu(a) => acc(*a, g.zip_map(self.value(*a), |d, x| if x > 0.0 { d } else { 0.0 })),
            Op::Sigmoid(_) | Op::Tanh(_) | Op::Exp(_) => {
                let (a, y) = match &node.op {
                    Op::Sigmoid(a) | Op::Tanh(a) | Op::Exp(a) => (*a, &node.value),
                    _ => unreachable!(),
                };
                let d = match &node.op {
                    Op::Sigmoid(_) => g.zip_map(y, |d, s| d * s * (1.0 - s)),
                    Op::Tanh(_) => g.zip_map(y, |d, t| d * (1.0 - t * t)),
                    _ => g.zip_map(y, |d, e| d * e),
                };
                acc(a, d);
            }
            Op::MeanRows(a) => {
                let x = self.value(*a);
                let r = x.rows();
                let gs = g.data();
                acc(*a, Tensor::from_fn(r, x.cols(), |_, j| gs[j] / r as f64));
            }
            Op::Sum(a) => {
                let x = self.value(*a);
                let d = Tensor::new(x.shape().to_vec(), vec![g.item(); x.len()])?;
                acc(*a, d);
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for p in parts {
                    let c = self.value(*p).cols();
                    let d = Tensor::from_fn(g.rows(), c, |i, j| g.get(i, off + j));
                    off += c;
                    acc(*p, d);
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for p in parts {
                    let t = self.value(*p);
                    let d = Tensor::from_fn(t.rows(), t.cols(), |i, j| g.get(off + i, j));
                    off += t.rows();
                    acc(*p, d);
                }
            }
            Op::GatherRows(a, idx) => {
                let x = self.value(*a);
                let c = x.cols();
                let mut d = Tensor::zeros(x.rows(), c);
                for (k, &i) in idx.iter().enumerate() {
                    let src = g.row_slice(k);
                    for (o, v) in d.data_mut()[i * c..(i + 1) * c].iter_mut().zip(src) {
                        *o += v;
                    }
                }
                acc(*a, d);
            }
            Op::Reshape(a) => {
                let x = self.value(*a);
                acc(*a, g.clone().reshape(x.shape().to_vec())?);
            }
            Op::SpMM(s, a) => acc(*a, s.t_matmul(g)?),
            Op::SoftmaxCe {
                logits,
                classes,
                weights,
                probs,
            } => {
                let gl = g.item();
                let mut d = probs.clone();
                for (i, (&k, &w)) in classes.iter().zip(weights).enumerate() {
                    let row = &mut d.data_mut()[i * probs.cols()..(i + 1) * probs.cols()];
                    row[k] -= 1.0;
                    for v in row.iter_mut() {
                        *v *= w * gl;
                    }
                }
                acc(*logits, d);
            }
            Op::Bce { prob, target, weights } => {
                let gl = g.item();
                let p = self.value(*prob);
                let mut d = Tensor::new(p.shape().to_vec(), vec![0.0; p.len()])?;
                for (k, o) in d.data_mut().iter_mut().enumerate() {
                    let pv = p.data()[k];
                    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&pv) {
                        continue;
                    }
                    let t = target.data()[k];
                    *o = gl * weights.data()[k] * (-t / pv + (1.0 - t) / (1.0 - pv));
                }
                acc(*prob, d);
            }
            Op::GaussianKl(mu, logvar) => {
                let gl = g.item();
                acc(*mu, self.value(*mu).map(|u| gl * u));
                acc(*logvar, self.value(*logvar).map(|l| gl * 0.5 * (l.exp() - 1.0)));
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn relu_forward() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(vec![-1.0, 2.0]));
        let y = t.relu(x).unwrap();
        assert_eq!(t.value(y).data(), &[0.0, 2.0]);
    }

    #[test]
    fn kl_of_unit_mean() {
        let mut t = Tape::new();
        let mu = t.constant(Tensor::row(vec![1.0]));
        let lv = t.constant(Tensor::row(vec![0.0]));
        let kl = t.gaussian_kl(mu, lv).unwrap();
        assert_eq!(t.scalar(kl), 0.5);
    }

    #[test]
    fn kl_zero_only_at_standard_normal() {
        let mut t = Tape::new();
        let mu = t.constant(Tensor::row(vec![0.0, 0.0]));
        let lv = t.constant(Tensor::row(vec![0.0, 0.3]));
        let kl = t.gaussian_kl(mu, lv).unwrap();
        assert!(t.scalar(kl) > 0.0);
        let lv0 = t.constant(Tensor::row(vec![0.0, 0.0]));
        let kl0 = t.gaussian_kl(mu, lv0).unwrap();
        assert_eq!(t.scalar(kl0), 0.0);
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(vec![0.0, 0.0]));
        let l = t.softmax_cross_entropy(x, &[0]).unwrap();
        assert!(close(t.scalar(l), std::f64::consts::LN_2, 1e-15));
    }

    #[test]
    fn cross_entropy_is_neg_log_prob() {
        let logits = [0.3, -1.2, 2.0];
        let z: f64 = logits.iter().map(|v: &f64| v.exp()).sum();
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(logits.to_vec()));
        for k in 0..3 {
            let l = t.softmax_cross_entropy(x, &[k]).unwrap();
            assert!(close(t.scalar(l), -(logits[k].exp() / z).ln(), 1e-14));
            assert!(t.scalar(l) >= 0.0);
        }
    }

    #[test]
    fn bce_clamps_saturated_probabilities() {
        let mut t = Tape::new();
        let p = t.constant(Tensor::row(vec![0.0, 1.0]));
        let l = t.bce(p, &Tensor::row(vec![1.0, 1.0])).unwrap();
        let expected = -(PROB_CLAMP.ln() + (1.0 - PROB_CLAMP).ln()) / 2.0;
        assert!(close(t.scalar(l), expected, 1e-9));
    }

    #[test]
    fn shape_error_lists_shapes() {
        let mut t = Tape::new();
        let a = t.constant(Tensor::zeros(2, 3));
        let b = t.constant(Tensor::zeros(2, 2));
        let msg = t.add(a, b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[2, 2]"), "{msg}");
    }

    #[test]
    fn unreachable_params_get_zero_grads() {
        let mut p = Params::new();
        p.insert("used", Tensor::row(vec![2.0]));
        p.insert("unused", Tensor::row(vec![5.0, 6.0]));
        let mut t = Tape::new();
        let u = t.param(&p, "used").unwrap();
        let sq = t.mul(u, u).unwrap();
        let l = t.sum(sq).unwrap();
        let g = t.backward(l, &p).unwrap();
        assert_eq!(g.get("used").unwrap().data(), &[4.0]);
        assert_eq!(g.get("unused").unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn gradient_is_linear_in_the_loss() {
        let mut r = rng(3);
        let mut p = Params::new();
        p.init_glorot("w", 3, 2, &mut r);
        let x = Tensor::from_fn(4, 3, |i, j| (i as f64 - j as f64) * 0.3);
        let run = |a: f64, b: f64| {
            let mut t = Tape::new();
            let w = t.param(&p, "w").unwrap();
            let xv = t.constant(x.clone());
            let h = t.matmul(xv, w).unwrap();
            let s = t.sigmoid(h).unwrap();
            let l1 = t.sum(s).unwrap();
            let l2 = t.softmax_cross_entropy(h, &[0, 1, 1, 0]).unwrap();
            let a1 = t.scale(l1, a).unwrap();
            let b2 = t.scale(l2, b).unwrap();
            let l = t.add(a1, b2).unwrap();
            t.backward(l, &p).unwrap()
        };
        let (g1, g2, g) = (run(1.0, 0.0), run(0.0, 1.0), run(2.0, -3.0));
        let (g1, g2, g) = (g1.get("w").unwrap(), g2.get("w").unwrap(), g.get("w").unwrap());
        for k in 0..g.len() {
            assert!(close(g.data()[k], 2.0 * g1.data()[k] - 3.0 * g2.data()[k], 1e-12));
        }
    }

    #[test]
    fn non_finite_output_is_a_numeric_error() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::row(vec![1000.0]));
        assert!(matches!(t.exp(x), Err(Error::Numeric(_))));
    }

    #[test]
    fn glorot_is_seeded() {
        let (mut a, mut b) = (Params::new(), Params::new());
        a.init_glorot("w", 4, 4, &mut rng(9));
        b.init_glorot("w", 4, 4, &mut rng(9));
        assert_eq!(a, b);
        assert!(a.max_abs() <= (6.0f64 / 8.0).sqrt());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!(close(sigmoid(0.0), 0.5, 0.0));
    }
}
