use std::sync::Arc;

use log::debug;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::embed::EmbeddingTable;
use super::layer::{init_mlp, init_rgcn, mlp, pool_matrix, rgcn_layer, Activation, Aggregation, GnnConfig, RelGraph};
use crate::error::{Error, Result};
use crate::graph::BehaviorSubgraph;
use crate::graphbuild::accumulate;
use crate::ingest::{stratified_split, Split};
use crate::numerics::{Adam, AdamConfig, Params, SparseMatrix, Tape, Tensor, Var};
use crate::seed;
use crate::space::AttributeSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    /// Width of the initial attribute vectors.
    pub embed_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub aggregation: Aggregation,
    pub gated: bool,
    pub activation: Activation,
    /// Hidden widths of the classifier head after the pooled vector.
    pub head: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    /// Behaviors per optimizer step; 0 means the whole training split.
    pub batch_size: usize,
    pub seed: u64,
    pub train_frac: f64,
    pub valid_frac: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            embed_dim: 768,
            hidden: 128,
            layers: 2,
            aggregation: Aggregation::Mean,
            gated: false,
            activation: Activation::Relu,
            head: vec![128, 64],
            epochs: 100,
            lr: 1e-3,
            batch_size: 0,
            seed: 0,
            train_frac: 0.8,
            valid_frac: 0.1,
        }
    }
}

/// Projection, relational layers and classifier head, bound to the
/// accumulated training graph used for message passing.
#[derive(Clone, Debug)]
pub struct Detector {
    pub config: DetectConfig,
    pub gnn: GnnConfig,
    pub classes: usize,
    pub params: Params,
    pub table: Tensor,
    pub graph: RelGraph,
}

#[derive(Clone, Debug)]
pub struct FitReport {
    pub loss_curve: Vec<f64>,
    pub valid_accuracy: Vec<f64>,
    pub best_epoch: usize,
    pub initial_params: Params,
}

#[derive(Clone, Debug)]
pub struct DetectOutcome {
    pub detector: Detector,
    pub report: FitReport,
    pub split: Split,
    pub test_predictions: Vec<usize>,
    pub test_accuracy: f64,
}

impl Detector {
    pub fn new(
        table: &EmbeddingTable,
        graph: RelGraph,
        relations: usize,
        classes: usize,
        config: &DetectConfig,
    ) -> Result<Self> {
        let gnn = GnnConfig {
            layers: config.layers,
            hidden: config.hidden,
            relations,
            aggregation: config.aggregation,
            gated: config.gated,
            activation: config.activation,
        };
        gnn.validate()?;
        if classes < 2 {
            return Err(Error::DegenerateLabels);
        }
        let mut rng = seed::stage_rng(config.seed, "detect-init");
        let mut params = Params::new();
        params.init_glorot("proj", table.dim(), config.hidden, &mut rng);
        for l in 0..config.layers {
            init_rgcn(&mut params, &format!("rgcn{l}"), config.hidden, config.hidden, &gnn, &mut rng);
        }
        let mut dims = vec![config.hidden];
        dims.extend(&config.head);
        dims.push(classes);
        init_mlp(&mut params, "head", &dims, &mut rng);
        Ok(Self {
            config: config.clone(),
            gnn,
            classes,
            params,
            table: table.table.clone(),
            graph,
        })
    }

    fn head_layers(&self) -> usize {
        self.config.head.len() + 1
    }

    /// Node states after projection and every relational layer.
    pub fn node_states_var(&self, tape: &mut Tape, params: &Params) -> Result<Var> {
        let x = tape.constant(self.table.clone());
        let w = tape.param(params, "proj")?;
        let mut h = tape.matmul(x, w)?;
        for l in 0..self.config.layers {
            h = rgcn_layer(tape, params, &format!("rgcn{l}"), h, &self.graph, &self.gnn, self.config.activation)?;
        }
        Ok(h)
    }

    pub fn logits_var(&self, tape: &mut Tape, params: &Params, states: Var, pool: &Arc<SparseMatrix>) -> Result<Var> {
        let z = tape.spmm(pool, states)?;
        mlp(tape, params, "head", self.head_layers(), z)
    }

    pub fn node_states(&self, params: &Params) -> Result<Tensor> {
        let mut t = Tape::new();
        let h = self.node_states_var(&mut t, params)?;
        Ok(t.value(h).clone())
    }

    pub fn logits(&self, subgraphs: &[BehaviorSubgraph]) -> Result<Tensor> {
        let mut t = Tape::new();
        let h = self.node_states_var(&mut t, &self.params)?;
        let pool = pool_matrix(subgraphs, self.graph.n)?;
        let l = self.logits_var(&mut t, &self.params, h, &pool)?;
        Ok(t.value(l).clone())
    }

    pub fn predict_proba(&self, subgraphs: &[BehaviorSubgraph]) -> Result<Tensor> {
        let l = self.logits(subgraphs)?;
        Ok(softmax_rows(&l))
    }

    pub fn predict(&self, subgraphs: &[BehaviorSubgraph]) -> Result<Vec<usize>> {
        let l = self.logits(subgraphs)?;
        Ok((0..l.rows()).map(|i| argmax(l.row_slice(i))).collect())
    }

    /// Adam training on `train`; keeps the parameters of the epoch with the
    /// best validation accuracy (last epoch when `valid` is empty).
    pub fn fit(
        &mut self,
        train: (&[BehaviorSubgraph], &[usize]),
        valid: (&[BehaviorSubgraph], &[usize]),
    ) -> Result<FitReport> {
        let (tr_sg, tr_y) = train;
        if tr_sg.len() != tr_y.len() || valid.0.len() != valid.1.len() {
            return Err(Error::InvalidArgument("subgraph and label counts differ".into()));
        }
        let first = tr_y.first().ok_or(Error::DegenerateLabels)?;
        if tr_y.iter().all(|y| y == first) {
            return Err(Error::DegenerateLabels);
        }
        if let Some(&bad) = tr_y.iter().chain(valid.1).find(|&&y| y >= self.classes) {
            return Err(Error::InvalidArgument(format!("label {bad} ≥ {} classes", self.classes)));
        }
        let initial_params = self.params.clone();
        let mut opt = Adam::new(AdamConfig {
            lr: self.config.lr,
            ..AdamConfig::default()
        });
        let mut rng = seed::stage_rng(self.config.seed, "detect-batches");
        let bs = if self.config.batch_size == 0 { tr_sg.len() } else { self.config.batch_size };
        let valid_pool = if valid.0.is_empty() { None } else { Some(pool_matrix(valid.0, self.graph.n)?) };
        let mut order: Vec<usize> = (0..tr_sg.len()).collect();
        let mut loss_curve = Vec::with_capacity(self.config.epochs);
        let mut valid_accuracy = Vec::new();
        let mut best = (f64::NEG_INFINITY, 0, self.params.clone());
        for epoch in 0..self.config.epochs {
            if bs < tr_sg.len() {
                order.shuffle(&mut rng);
            }
            let mut total = 0.0;
            for batch in order.chunks(bs) {
                let sgs: Vec<&BehaviorSubgraph> = batch.iter().map(|&i| &tr_sg[i]).collect();
                let ys: Vec<usize> = batch.iter().map(|&i| tr_y[i]).collect();
                let pool = pool_matrix(sgs, self.graph.n)?;
                let mut t = Tape::new();
                let h = self.node_states_var(&mut t, &self.params)?;
                let logits = self.logits_var(&mut t, &self.params, h, &pool)?;
                let loss = t.softmax_cross_entropy(logits, &ys)?;
                total += t.scalar(loss) * batch.len() as f64;
                let g = t.backward(loss, &self.params)?;
                opt.step(&mut self.params, &g)?;
            }
            loss_curve.push(total / tr_sg.len() as f64);
            if let Some(pool) = &valid_pool {
                let mut t = Tape::new();
                let h = self.node_states_var(&mut t, &self.params)?;
                let l = self.logits_var(&mut t, &self.params, h, pool)?;
                let lv = t.value(l);
                let correct = (0..lv.rows()).filter(|&i| argmax(lv.row_slice(i)) == valid.1[i]).count();
                let acc = correct as f64 / lv.rows() as f64;
                valid_accuracy.push(acc);
                if acc > best.0 {
                    best = (acc, epoch, self.params.clone());
                }
            }
            debug!("epoch {epoch} loss {:.5}", loss_curve[epoch]);
        }
        let best_epoch = if valid_pool.is_some() {
            self.params = best.2;
            best.1
        } else {
            self.config.epochs.saturating_sub(1)
        };
        Ok(FitReport {
            loss_curve,
            valid_accuracy,
            best_epoch,
            initial_params,
        })
    }
}

pub fn softmax_rows(l: &Tensor) -> Tensor {
    let mut out = l.clone();
    let c = l.cols();
    for row in out.data_mut().chunks_mut(c.max(1)) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    out
}

/// First index of the maximum.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Stratified split, message passing over the training behaviors' graph,
/// evaluation on the held-out test split.
pub fn train_detect(
    space: &AttributeSpace,
    subgraphs: &[BehaviorSubgraph],
    labels: &[usize],
    classes: usize,
    relations: usize,
    table: &EmbeddingTable,
    config: &DetectConfig,
) -> Result<DetectOutcome> {
    if subgraphs.len() != labels.len() {
        return Err(Error::InvalidArgument("subgraph and label counts differ".into()));
    }
    let split = stratified_split(labels, config.train_frac, config.valid_frac, seed::stage_seed(config.seed, "split"));
    let pick = |idx: &[usize]| -> (Vec<BehaviorSubgraph>, Vec<usize>) {
        (idx.iter().map(|&i| subgraphs[i].clone()).collect(), idx.iter().map(|&i| labels[i]).collect())
    };
    let (tr_sg, tr_y) = pick(&split.train);
    let (va_sg, va_y) = pick(&split.valid);
    let (te_sg, te_y) = pick(&split.test);
    let graph = accumulate(&tr_sg, space)?;
    let rel = RelGraph::new(&graph, space.len(), relations, config.aggregation)?;
    let mut detector = Detector::new(table, rel, relations, classes, config)?;
    let report = detector.fit((&tr_sg, &tr_y), (&va_sg, &va_y))?;
    let (test_predictions, test_accuracy) = if te_sg.is_empty() {
        (Vec::new(), f64::NAN)
    } else {
        let p = detector.predict(&te_sg)?;
        let acc = p.iter().zip(&te_y).filter(|(a, b)| a == b).count() as f64 / p.len() as f64;
        (p, acc)
    };
    Ok(DetectOutcome {
        detector,
        report,
        split,
        test_predictions,
        test_accuracy,
    })
}
