use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::detector::argmax;
use super::layer::{init_rgcn, rgcn_layer, Activation, Aggregation, GnnConfig, RelGraph};
use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::numerics::{Adam, AdamConfig, Params, Tape, Tensor};
use crate::seed;
use crate::space::NodeId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NodeClassConfig {
    pub dim: usize,
    pub layers: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub aggregation: Aggregation,
}

impl Default for NodeClassConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            layers: 2,
            epochs: 100,
            lr: 1e-3,
            seed: 0,
            aggregation: Aggregation::Mean,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NodeClassModel {
    pub params: Params,
    /// Final relational-layer states, one row per node id.
    pub embeddings: Tensor,
    pub loss_curve: Vec<f64>,
    pub train_accuracy: f64,
}

/// Node classification over `graph` with a free embedding per node id.
/// `n` is the number of node rows (the attribute space size).
pub fn train_nodeclass(
    graph: &HeteroGraph,
    n: usize,
    relations: usize,
    labels: &BTreeMap<NodeId, usize>,
    classes: usize,
    config: &NodeClassConfig,
) -> Result<NodeClassModel> {
    let distinct: std::collections::BTreeSet<_> = labels.values().collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateLabels);
    }
    if let Some(&bad) = labels.values().find(|&&c| c >= classes) {
        return Err(Error::InvalidArgument(format!("class {bad} ≥ {classes}")));
    }
    let gnn = GnnConfig {
        layers: config.layers,
        hidden: config.dim,
        relations,
        aggregation: config.aggregation,
        gated: false,
        activation: Activation::Relu,
    };
    gnn.validate()?;
    let rel = RelGraph::new(graph, n, relations, config.aggregation)?;
    let mut rng = seed::stage_rng(config.seed, "nodeclass-init");
    let mut params = Params::new();
    params.init_normal("emb", n, config.dim, 1.0 / (config.dim as f64).sqrt(), &mut rng);
    for l in 0..config.layers {
        init_rgcn(&mut params, &format!("rgcn{l}"), config.dim, config.dim, &gnn, &mut rng);
    }
    params.init_glorot("out.w", config.dim, classes, &mut rng);
    params.init_zeros("out.b", 1, classes);

    let idx: Vec<usize> = labels.keys().map(|k| k.index()).collect();
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::Graph(format!("labeled node {bad} outside {n} rows")));
    }
    let ys: Vec<usize> = labels.values().copied().collect();
    let forward = |t: &mut Tape, p: &Params| -> Result<(crate::numerics::Var, crate::numerics::Var)> {
        let mut h = t.param(p, "emb")?;
        for l in 0..config.layers {
            h = rgcn_layer(t, p, &format!("rgcn{l}"), h, &rel, &gnn, Activation::Relu)?;
        }
        let sel = t.gather_rows(h, &idx)?;
        let w = t.param(p, "out.w")?;
        let b = t.param(p, "out.b")?;
        Ok((h, t.linear(sel, w, b)?))
    };
    let mut opt = Adam::new(AdamConfig {
        lr: config.lr,
        ..AdamConfig::default()
    });
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut t = Tape::new();
        let (_, logits) = forward(&mut t, &params)?;
        let loss = t.softmax_cross_entropy(logits, &ys)?;
        loss_curve.push(t.scalar(loss));
        let g = t.backward(loss, &params)?;
        opt.step(&mut params, &g)?;
    }
    let mut t = Tape::new();
    let (h, logits) = forward(&mut t, &params)?;
    let lv = t.value(logits);
    let correct = (0..lv.rows()).filter(|&i| argmax(lv.row_slice(i)) == ys[i]).count();
    Ok(NodeClassModel {
        embeddings: t.value(h).clone(),
        train_accuracy: correct as f64 / ys.len() as f64,
        params,
        loss_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeType;

    #[test]
    fn separates_two_communities() {
        let mut g = HeteroGraph::new();
        for i in 0..8 {
            g.add_node(NodeId(i), 0);
        }
        for (a, b) in [(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)] {
            g.add_edge(NodeId(a), NodeId(b), EdgeType(0), 1).unwrap();
        }
        let labels: BTreeMap<NodeId, usize> = (0..8).map(|i| (NodeId(i), (i / 4) as usize)).collect();
        let cfg = NodeClassConfig {
            dim: 8,
            epochs: 150,
            lr: 0.01,
            ..NodeClassConfig::default()
        };
        let m = train_nodeclass(&g, 8, 1, &labels, 2, &cfg).unwrap();
        assert_eq!(m.train_accuracy, 1.0);
        assert_eq!(m.embeddings.shape(), &[8, 8]);
        assert!(m.loss_curve.last().unwrap() < &m.loss_curve[0]);
        let again = train_nodeclass(&g, 8, 1, &labels, 2, &cfg).unwrap();
        assert_eq!(again.embeddings, m.embeddings);
    }

    #[test]
    fn one_class_rejected() {
        let g = HeteroGraph::new();
        let labels: BTreeMap<NodeId, usize> = [(NodeId(0), 1)].into();
        assert!(matches!(
            train_nodeclass(&g, 1, 1, &labels, 2, &NodeClassConfig::default()),
            Err(Error::DegenerateLabels)
        ));
    }
}
