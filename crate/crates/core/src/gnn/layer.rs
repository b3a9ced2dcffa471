use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BehaviorSubgraph, HeteroGraph};
use crate::numerics::{Params, SparseMatrix, Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Neighbor messages divided by the weighted degree per relation.
    Mean,
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::Tanh => tape.tanh(x),
            Activation::Identity => Ok(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub layers: usize,
    pub hidden: usize,
    pub relations: usize,
    pub aggregation: Aggregation,
    /// Sigmoid gate on the neighbor term.
    pub gated: bool,
    pub activation: Activation,
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden == 0 || self.relations == 0 {
            return Err(Error::InvalidArgument(format!(
                "gnn needs layers, hidden and relations ≥ 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Per-relation normalized adjacency over `n` node rows.
#[derive(Clone, Debug)]
pub struct RelGraph {
    pub n: usize,
    pub adj: Vec<Arc<SparseMatrix>>,
}

impl RelGraph {
    pub fn new(graph: &HeteroGraph, n: usize, relations: usize, aggregation: Aggregation) -> Result<Self> {
        let mut trip: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); relations];
        for (k, w) in graph.edges() {
            let (a, b, r) = (k.a.index(), k.b.index(), k.edge_type.index());
            if a >= n || b >= n {
                return Err(Error::Graph(format!("edge {}-{} leaves the {n} node rows", k.a, k.b)));
            }
            if r >= relations {
                return Err(Error::Graph(format!("relation {r} but only {relations} configured")));
            }
            trip[r].push((a, b, w as f64));
            trip[r].push((b, a, w as f64));
        }
        let adj = trip
            .into_iter()
            .map(|mut t| {
                if aggregation == Aggregation::Mean {
                    let mut deg = vec![0.0; n];
                    for &(i, _, w) in &t {
                        deg[i] += w;
                    }
                    for e in &mut t {
                        e.2 /= deg[e.0];
                    }
                }
                SparseMatrix::from_triplets(n, n, t).map(Arc::new)
            })
            .collect::<Result<_>>()?;
        Ok(Self { n, adj })
    }

    /// Graph with no edges: every node keeps only its self term.
    pub fn empty(n: usize, relations: usize) -> Self {
        let adj = (0..relations)
            .map(|_| Arc::new(SparseMatrix::from_triplets(n, n, Vec::new()).expect("empty")))
            .collect();
        Self { n, adj }
    }
}

pub fn init_rgcn(params: &mut Params, prefix: &str, d_in: usize, d_out: usize, cfg: &GnnConfig, rng: &mut impl rand::Rng) {
    params.init_glorot(&format!("{prefix}.self"), d_in, d_out, rng);
    for r in 0..cfg.relations {
        params.init_glorot(&format!("{prefix}.rel{r}"), d_in, d_out, rng);
    }
    if cfg.gated {
        params.init_glorot(&format!("{prefix}.gate.w"), d_in, d_out, rng);
        params.init_zeros(&format!("{prefix}.gate.b"), 1, d_out);
    }
}

/// `act(H·W0 + gate ⊙ Σ_r A_r·H·W_r)`, rows of `h` indexed by node id.
pub fn rgcn_layer(
    tape: &mut Tape,
    params: &Params,
    prefix: &str,
    h: Var,
    graph: &RelGraph,
    cfg: &GnnConfig,
    activation: Activation,
) -> Result<Var> {
    if tape.value(h).rows() != graph.n {
        return Err(Error::shape("rgcn_layer", tape.value(h).shape(), &[graph.n]));
    }
    if graph.adj.len() != cfg.relations {
        return Err(Error::Graph(format!(
            "graph has {} relations, layer {}",
            graph.adj.len(),
            cfg.relations
        )));
    }
    let w0 = tape.param(params, &format!("{prefix}.self"))?;
    let mut out = tape.matmul(h, w0)?;
    let mut msg: Option<Var> = None;
    for (r, a) in graph.adj.iter().enumerate() {
        if a.nnz() == 0 {
            continue;
        }
        let wr = tape.param(params, &format!("{prefix}.rel{r}"))?;
        let agg = tape.spmm(a, h)?;
        let m = tape.matmul(agg, wr)?;
        msg = Some(match msg {
            Some(acc) => tape.add(acc, m)?,
            None => m,
        });
    }
    if let Some(mut m) = msg {
        if cfg.gated {
            let gw = tape.param(params, &format!("{prefix}.gate.w"))?;
            let gb = tape.param(params, &format!("{prefix}.gate.b"))?;
            let g = tape.linear(h, gw, gb)?;
            let g = tape.sigmoid(g)?;
            m = tape.mul(g, m)?;
        }
        out = tape.add(out, m)?;
    }
    activation.apply(tape, out)
}

/// Row-averaging matrix: row `b` is the mean over behavior `b`'s nodes.
pub fn pool_matrix<'a>(subgraphs: impl IntoIterator<Item = &'a BehaviorSubgraph>, n: usize) -> Result<Arc<SparseMatrix>> {
    let mut trip = Vec::new();
    let mut rows = 0;
    for (b, sg) in subgraphs.into_iter().enumerate() {
        if sg.nodes.is_empty() {
            return Err(Error::EmptyBehavior(sg.record_id.clone()));
        }
        let w = 1.0 / sg.nodes.len() as f64;
        for &id in &sg.nodes {
            trip.push((b, id.index(), w));
        }
        rows = b + 1;
    }
    Ok(Arc::new(SparseMatrix::from_triplets(rows, n, trip)?))
}

/// Mean of the subgraph's node states.
pub fn mean_pool(tape: &mut Tape, h: Var, subgraph: &BehaviorSubgraph) -> Result<Var> {
    if subgraph.nodes.is_empty() {
        return Err(Error::EmptyBehavior(subgraph.record_id.clone()));
    }
    let idx: Vec<usize> = subgraph.nodes.iter().map(|n| n.index()).collect();
    let g = tape.gather_rows(h, &idx)?;
    tape.mean_rows(g)
}

/// Fully connected layers `dims[0] → … → dims[last]`, ReLU between them.
/// The last layer starts at zero so the initial softmax is uniform.
pub fn init_mlp(params: &mut Params, prefix: &str, dims: &[usize], rng: &mut impl rand::Rng) {
    for (i, w) in dims.windows(2).enumerate() {
        if i + 2 == dims.len() {
            params.init_zeros(&format!("{prefix}.{i}.w"), w[0], w[1]);
        } else {
            params.init_glorot(&format!("{prefix}.{i}.w"), w[0], w[1], rng);
        }
        params.init_zeros(&format!("{prefix}.{i}.b"), 1, w[1]);
    }
}

pub fn mlp(tape: &mut Tape, params: &Params, prefix: &str, layers: usize, x: Var) -> Result<Var> {
    let mut h = x;
    for i in 0..layers {
        let w = tape.param(params, &format!("{prefix}.{i}.w"))?;
        let b = tape.param(params, &format!("{prefix}.{i}.b"))?;
        h = tape.linear(h, w, b)?;
        if i + 1 < layers {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeType;
    use crate::numerics::{grad_check, Tensor};
    use crate::seed::rng;
    use crate::space::NodeId;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn cfg(relations: usize, gated: bool) -> GnnConfig {
        GnnConfig {
            layers: 1,
            hidden: 2,
            relations,
            aggregation: Aggregation::Mean,
            gated,
            activation: Activation::Identity,
        }
    }

    fn run_layer(params: &Params, h: Tensor, g: &RelGraph, c: &GnnConfig, act: Activation) -> Tensor {
        let mut t = Tape::new();
        let hv = t.constant(h);
        let out = rgcn_layer(&mut t, params, "l", hv, g, c, act).unwrap();
        t.value(out).clone()
    }

    #[test]
    fn identity_relation_copies_single_neighbor() {
        let mut g = HeteroGraph::new();
        g.add_node(NodeId(0), 0);
        g.add_node(NodeId(1), 1);
        g.add_edge(NodeId(0), NodeId(1), EdgeType(0), 3).unwrap();
        let rel = RelGraph::new(&g, 2, 1, Aggregation::Mean).unwrap();
        let mut p = Params::new();
        p.insert("l.self", Tensor::zeros(2, 2));
        p.insert("l.rel0", Tensor::identity(2));
        let h = Tensor::from_rows(&[vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        let out = run_layer(&p, h, &rel, &cfg(1, false), Activation::Identity);
        assert_eq!(out.row_slice(0), &[2.0, 2.0]);
    }

    #[test]
    fn isolated_node_keeps_self_term() {
        let rel = RelGraph::empty(1, 1);
        let mut p = Params::new();
        p.insert("l.self", Tensor::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0]]).unwrap());
        p.insert("l.rel0", Tensor::full(2, 2, 9.0));
        let out = run_layer(&p, Tensor::row(vec![1.0, 1.0]), &rel, &cfg(1, false), Activation::Relu);
        assert_eq!(out.data(), &[1.5, 1.0]);
    }

    fn random_graph(seed: u64, n: u32, relations: u16) -> HeteroGraph {
        let mut r = rng(seed);
        let mut g = HeteroGraph::new();
        for i in 0..n {
            g.add_node(NodeId(i), 0);
        }
        for a in 0..n {
            for b in a + 1..n {
                if r.random_bool(0.5) {
                    let w = r.random_range(1..4);
                    g.add_edge(NodeId(a), NodeId(b), EdgeType(r.random_range(0..relations)), w).unwrap();
                }
            }
        }
        g
    }

    /// Dense oracle: per node, loop over neighbors explicitly.
    fn dense_oracle(g: &HeteroGraph, h: &Tensor, p: &Params, relations: usize, gated: bool) -> Tensor {
        let n = h.rows();
        let w0 = p.get("l.self").unwrap();
        let mut out = h.matmul(w0).unwrap();
        let d = out.cols();
        for i in 0..n {
            let mut msg = vec![0.0; d];
            for r in 0..relations {
                let wr = p.get(&format!("l.rel{r}")).unwrap();
                let mut acc = vec![0.0; h.cols()];
                let mut deg = 0.0;
                for (k, w) in g.edges() {
                    if k.edge_type.index() != r {
                        continue;
                    }
                    let j = if k.a.index() == i {
                        k.b.index()
                    } else if k.b.index() == i {
                        k.a.index()
                    } else {
                        continue;
                    };
                    deg += w as f64;
                    for (c, v) in acc.iter_mut().enumerate() {
                        *v += w as f64 * h.get(j, c);
                    }
                }
                if deg == 0.0 {
                    continue;
                }
                for (o, m) in msg.iter_mut().enumerate() {
                    for (c, a) in acc.iter().enumerate() {
                        *m += a / deg * wr.get(c, o);
                    }
                }
            }
            if gated {
                let gw = p.get("l.gate.w").unwrap();
                let gb = p.get("l.gate.b").unwrap();
                for (o, m) in msg.iter_mut().enumerate() {
                    let z: f64 = (0..h.cols()).map(|c| h.get(i, c) * gw.get(c, o)).sum::<f64>() + gb.get(0, o);
                    *m *= 1.0 / (1.0 + (-z).exp());
                }
            }
            for (o, m) in msg.iter().enumerate() {
                out.set(i, o, (out.get(i, o) + m).tanh());
            }
        }
        out
    }

    #[test]
    fn matches_dense_oracle() {
        for (seed, gated) in [(1, false), (2, true), (3, false)] {
            let g = random_graph(seed, 5, 2);
            let mut r = rng(seed + 100);
            let mut c = cfg(2, gated);
            c.hidden = 3;
            let mut p = Params::new();
            init_rgcn(&mut p, "l", 4, 3, &c, &mut r);
            if gated {
                p.init_normal("l.gate.b", 1, 3, 1.0, &mut r);
            }
            let h = Tensor::from_fn(5, 4, |_, _| r.random_range(-1.0..1.0));
            let rel = RelGraph::new(&g, 5, 2, Aggregation::Mean).unwrap();
            let got = run_layer(&p, h.clone(), &rel, &c, Activation::Tanh);
            let want = dense_oracle(&g, &h, &p, 2, gated);
            assert!(got.max_abs_diff(&want) < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn permutation_equivariance() {
        let g = random_graph(11, 6, 2);
        let mut r = rng(12);
        let c = cfg(2, true);
        let mut p = Params::new();
        init_rgcn(&mut p, "l", 3, 2, &c, &mut r);
        let h = Tensor::from_fn(6, 3, |_, _| r.random_range(-1.0..1.0));
        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut r);
        let mut pg = HeteroGraph::new();
        for i in 0..6 {
            pg.add_node(NodeId(perm[i] as u32), 0);
        }
        for (k, w) in g.edges() {
            pg.add_edge(NodeId(perm[k.a.index()] as u32), NodeId(perm[k.b.index()] as u32), k.edge_type, w)
                .unwrap();
        }
        let ph = Tensor::from_fn(6, 3, |i, j| h.get(perm.iter().position(|&p| p == i).unwrap(), j));
        let a = run_layer(&p, h, &RelGraph::new(&g, 6, 2, Aggregation::Mean).unwrap(), &c, Activation::Relu);
        let b = run_layer(&p, ph, &RelGraph::new(&pg, 6, 2, Aggregation::Mean).unwrap(), &c, Activation::Relu);
        for i in 0..6 {
            assert!(a.row_slice(i).iter().zip(b.row_slice(perm[i])).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn sum_aggregation_keeps_weights() {
        let mut g = HeteroGraph::new();
        for i in 0..3 {
            g.add_node(NodeId(i), 0);
        }
        g.add_edge(NodeId(0), NodeId(1), EdgeType(0), 2).unwrap();
        g.add_edge(NodeId(0), NodeId(2), EdgeType(0), 1).unwrap();
        let d = RelGraph::new(&g, 3, 1, Aggregation::Sum).unwrap().adj[0].to_dense();
        assert_eq!(d.row_slice(0), &[0.0, 2.0, 1.0]);
        let m = RelGraph::new(&g, 3, 1, Aggregation::Mean).unwrap().adj[0].to_dense();
        assert!((m.get(0, 1) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dangling_edge_is_a_graph_error() {
        let mut g = HeteroGraph::new();
        g.add_node(NodeId(0), 0);
        g.add_node(NodeId(5), 0);
        g.add_edge(NodeId(0), NodeId(5), EdgeType(0), 1).unwrap();
        assert!(matches!(RelGraph::new(&g, 3, 1, Aggregation::Mean), Err(Error::Graph(_))));
    }

    fn sg(nodes: &[u32]) -> BehaviorSubgraph {
        BehaviorSubgraph {
            record_id: "b".into(),
            nodes: nodes.iter().map(|&i| NodeId(i)).collect(),
            edges: vec![],
        }
    }

    #[test]
    fn mean_pool_examples() {
        let mut t = Tape::new();
        let h = t.constant(Tensor::from_rows(&[vec![1.0, 3.0], vec![3.0, 5.0]]).unwrap());
        let m = mean_pool(&mut t, h, &sg(&[0, 1])).unwrap();
        assert_eq!(t.value(m).data(), &[2.0, 4.0]);
        let one = mean_pool(&mut t, h, &sg(&[1])).unwrap();
        assert_eq!(t.value(one).data(), &[3.0, 5.0]);
        assert!(matches!(mean_pool(&mut t, h, &sg(&[])), Err(Error::EmptyBehavior(_))));
        let pm = pool_matrix([&sg(&[0, 1]), &sg(&[1])], 2).unwrap();
        let pooled = t.spmm(&pm, h).unwrap();
        assert_eq!(t.value(pooled).data(), &[2.0, 4.0, 3.0, 5.0]);
    }

    #[test]
    fn pooled_gradient_splits_equally() {
        let mut p = Params::new();
        p.insert("h", Tensor::from_fn(3, 2, |i, j| (i + j) as f64));
        let s = sg(&[0, 2]);
        let loss = |t: &mut Tape, p: &Params| {
            let h = t.param(p, "h")?;
            let m = mean_pool(t, h, &s)?;
            t.sum(m)
        };
        let mut t = Tape::new();
        let l = loss(&mut t, &p).unwrap();
        let g = t.backward(l, &p).unwrap();
        assert_eq!(g.get("h").unwrap().data(), &[0.5, 0.5, 0.0, 0.0, 0.5, 0.5]);
        assert!(grad_check(&p, 1e-5, 1, loss).unwrap().max_rel_error < 1e-9);
    }

    #[test]
    fn head_and_pool_ignore_node_order() {
        let mut r = rng(1);
        let mut p = Params::new();
        init_mlp(&mut p, "head", &[2, 4, 3], &mut r);
        p.init_normal("head.1.w", 4, 3, 1.0, &mut r);
        let h = Tensor::from_fn(3, 2, |i, j| (i as f64) - (j as f64) * 0.5);
        let eval = |order: &[u32]| {
            let mut t = Tape::new();
            let hv = t.constant(h.clone());
            let z = mean_pool(&mut t, hv, &sg(order)).unwrap();
            let o = mlp(&mut t, &p, "head", 2, z).unwrap();
            t.value(o).clone()
        };
        assert!(eval(&[0, 1, 2]).max_abs_diff(&eval(&[2, 0, 1])) < 1e-15);
    }
}
