use std::sync::Arc;

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::matching::{identity_match, match_nodes, Assignment, MatchMode};
use super::slots::{SlotSchema, VaeGraph};
use crate::error::{Error, Result};
use crate::gnn::{argmax, init_rgcn, rgcn_layer, softmax_rows, Activation, Aggregation, GnnConfig, RelGraph};
use crate::graph::{EdgeType, HeteroGraph};
use crate::numerics::{Adam, AdamConfig, Params, SparseMatrix, Tape, Tensor, Var, PROB_CLAMP};
use crate::seed;
use crate::space::NodeId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaeConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub latent: usize,
    pub decoder_hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub lambda_a: f64,
    pub lambda_f: f64,
    pub lambda_e: f64,
    pub match_mode: MatchMode,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self {
            embed_dim: 16,
            hidden: 32,
            latent: 32,
            decoder_hidden: 64,
            epochs: 200,
            lr: 3e-3,
            batch_size: 32,
            seed: 0,
            lambda_a: 1.0,
            lambda_f: 1.0,
            lambda_e: 1.0,
            match_mode: MatchMode::Identity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentCode {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    pub eps: Vec<f64>,
    pub z: Vec<f64>,
}

/// Decoded probabilistic graph over `k` slots.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbGraph {
    pub k: usize,
    /// `k × k`, symmetric; the diagonal is the node-existence probability.
    pub adj: Tensor,
    /// `k × V`, rows on the simplex.
    pub node: Tensor,
    pub edge_classes: usize,
    /// `k × k × R` row-major; diagonal fibers are uniform.
    pub edge: Vec<f64>,
}

impl ProbGraph {
    pub fn edge_probs(&self, a: usize, b: usize) -> &[f64] {
        let r = self.edge_classes;
        let s = (a * self.k + b) * r;
        &self.edge[s..s + r]
    }
}

/// Input graph mapped through the assignment: `A′ = XAXᵀ` (with the node
/// diagonal), node classes and edge classes at their decoder positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub k: usize,
    pub adj: Vec<Vec<bool>>,
    /// `(decoder node, token)`
    pub nodes: Vec<(usize, usize)>,
    /// `(a, b, relation)` with `a < b` decoder nodes.
    pub edges: Vec<(usize, usize, usize)>,
}

impl Target {
    pub fn new(g: &VaeGraph, x: &Assignment) -> Self {
        let k = x.k;
        let mut adj = vec![vec![false; k]; k];
        let nodes = g
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &(_, token))| {
                let a = x.rows[i];
                adj[a][a] = true;
                (a, token)
            })
            .collect();
        let edges = g
            .edges
            .iter()
            .map(|&(i, j, r)| {
                let (a, b) = (x.rows[i], x.rows[j]);
                adj[a][b] = true;
                adj[b][a] = true;
                (a.min(b), a.max(b), r as usize)
            })
            .collect();
        Self { k, adj, nodes, edges }
    }
}

/// Negative log-likelihood terms of one graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconTerms {
    pub adjacency: f64,
    pub node: f64,
    /// `None` when the graph has no edges.
    pub edge: Option<f64>,
}

impl ReconTerms {
    pub fn weighted(&self, cfg: &VaeConfig) -> f64 {
        cfg.lambda_a * self.adjacency + cfg.lambda_f * self.node + cfg.lambda_e * self.edge.unwrap_or(0.0)
    }
}

/// Reconstruction loss evaluated directly on probabilities.
pub fn recon_loss(t: &Target, p: &ProbGraph) -> Result<ReconTerms> {
    let k = t.k;
    if p.k != k {
        return Err(Error::shape("recon_loss", &[k], &[p.k]));
    }
    let bce = |y: bool, q: f64| {
        let q = q.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        -if y { q.ln() } else { (1.0 - q).ln() }
    };
    let mut diag = 0.0;
    let mut off = 0.0;
    for a in 0..k {
        for b in 0..k {
            if a == b {
                diag += bce(t.adj[a][a], p.adj.get(a, a));
            } else {
                off += bce(t.adj[a][b], p.adj.get(a, b));
            }
        }
    }
    let mut adjacency = diag / k as f64;
    if k > 1 {
        adjacency += off / (k * (k - 1)) as f64;
    }
    let lnp = |q: f64| -q.max(PROB_CLAMP).ln();
    let node = if t.nodes.is_empty() {
        0.0
    } else {
        t.nodes.iter().map(|&(a, c)| lnp(p.node.get(a, c))).sum::<f64>() / t.nodes.len() as f64
    };
    let edge = (!t.edges.is_empty())
        .then(|| t.edges.iter().map(|&(a, b, r)| lnp(p.edge_probs(a, b)[r])).sum::<f64>() / t.edges.len() as f64);
    Ok(ReconTerms { adjacency, node, edge })
}

/// Per-term values of a batch loss, averaged over graphs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub adjacency: f64,
    pub node: f64,
    pub edge: f64,
    pub kl: f64,
    pub total: f64,
    /// Graphs whose edge term was skipped for lack of edges.
    pub edgeless: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VaeReport {
    pub elbo_curve: Vec<f64>,
    pub last: LossParts,
    pub fallbacks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub graphs: Vec<VaeGraph>,
    pub attempts: usize,
    pub rejected: usize,
    pub rejection_rate: f64,
    /// The retry budget ran out before `count` valid graphs were found.
    pub exhausted: bool,
}

/// Graph variational autoencoder over slot graphs.
#[derive(Clone, Debug)]
pub struct GraphVae {
    pub config: VaeConfig,
    pub schema: SlotSchema,
    pub params: Params,
}

struct Batch {
    size: usize,
    tokens: Vec<usize>,
    graph: RelGraph,
    pool: Arc<SparseMatrix>,
    adj_target: Tensor,
    adj_weight: Tensor,
    node_rows: Vec<usize>,
    node_classes: Vec<usize>,
    node_weight: Vec<f64>,
    edge_rows: Vec<usize>,
    edge_classes: Vec<usize>,
    edge_weight: Vec<f64>,
    edgeless: usize,
}

impl GraphVae {
    pub fn new(schema: SlotSchema, config: VaeConfig) -> Result<Self> {
        if schema.k() == 0 || schema.vocab == 0 {
            return Err(Error::InvalidArgument("decoder needs at least one slot and one token".into()));
        }
        if config.latent == 0 || config.hidden == 0 || config.embed_dim == 0 || config.decoder_hidden == 0 {
            return Err(Error::InvalidArgument("VAE widths must be positive".into()));
        }
        let mut rng = seed::stage_rng(config.seed, "vae-init");
        let mut p = Params::new();
        let gnn = Self::gnn_config(&schema, &config);
        p.init_normal("enc.emb", schema.vocab, config.embed_dim, 1.0 / (config.embed_dim as f64).sqrt(), &mut rng);
        init_rgcn(&mut p, "enc.rgcn0", config.embed_dim, config.hidden, &gnn, &mut rng);
        init_rgcn(&mut p, "enc.rgcn1", config.hidden, config.hidden, &gnn, &mut rng);
        for head in ["enc.mu", "enc.logvar"] {
            p.init_glorot(&format!("{head}.w"), config.hidden, config.latent, &mut rng);
            p.init_zeros(&format!("{head}.b"), 1, config.latent);
        }
        let h = config.decoder_hidden;
        let k = schema.k();
        let outs = [
            ("dec.0", config.latent, h),
            ("dec.1", h, h),
            ("dec.adj", h, schema.tri_len()),
            ("dec.node", h, k * schema.vocab),
            ("dec.edge", h, (schema.pairs() * schema.relations).max(1)),
        ];
        for (name, i, o) in outs {
            p.init_glorot(&format!("{name}.w"), i, o, &mut rng);
            p.init_zeros(&format!("{name}.b"), 1, o);
        }
        Ok(Self {
            config,
            schema,
            params: p,
        })
    }

    fn gnn_config(schema: &SlotSchema, config: &VaeConfig) -> GnnConfig {
        GnnConfig {
            layers: 2,
            hidden: config.hidden,
            relations: schema.relations,
            aggregation: Aggregation::Mean,
            gated: false,
            activation: Activation::Relu,
        }
    }

    fn check_size(&self, g: &VaeGraph) -> Result<()> {
        if g.node_count() > self.schema.k() {
            return Err(Error::TooManyNodes {
                nodes: g.node_count(),
                max: self.schema.k(),
            });
        }
        if g.nodes.is_empty() {
            return Err(Error::EmptyBehavior("graph without nodes".into()));
        }
        if let Some(&(_, t)) = g.nodes.iter().find(|&&(_, t)| t >= self.schema.vocab) {
            return Err(Error::Graph(format!("token {t} outside the {} token vocabulary", self.schema.vocab)));
        }
        Ok(())
    }

    /// Assignment of one graph under the configured mode; the similarity
    /// used by the solver is `F̃_a[token_i]` decoded at the posterior mean.
    pub fn match_graph(&self, g: &VaeGraph) -> Result<(Assignment, bool)> {
        self.check_size(g)?;
        let k = self.schema.k();
        if self.config.match_mode == MatchMode::Identity {
            if let Some(x) = identity_match(g, k)? {
                return Ok((x, false));
            }
        }
        let code = self.encode_with_eps(g, &vec![0.0; self.config.latent])?;
        let prob = self.decode(&code.z)?;
        let out = match_nodes(g, k, self.config.match_mode, |i, a| prob.node.get(a, g.nodes[i].1))?;
        Ok((out.assignment, out.fell_back))
    }

    fn batch(&self, items: &[(&VaeGraph, &Assignment)]) -> Result<Batch> {
        let k = self.schema.k();
        let (tl, pairs) = (self.schema.tri_len(), self.schema.pairs());
        let size = items.len();
        let inv_b = 1.0 / size as f64;
        let mut hetero = HeteroGraph::new();
        let mut tokens = Vec::new();
        let mut pool = Vec::new();
        let mut adj_target = Tensor::zeros(size, tl);
        let mut adj_weight = Tensor::zeros(size, tl);
        let (mut node_rows, mut node_classes, mut node_weight) = (Vec::new(), Vec::new(), Vec::new());
        let (mut edge_rows, mut edge_classes, mut edge_weight) = (Vec::new(), Vec::new(), Vec::new());
        let mut edgeless = 0;
        for (b, &(g, x)) in items.iter().enumerate() {
            self.check_size(g)?;
            let off = tokens.len();
            let n = g.node_count();
            for (i, &(_, t)) in g.nodes.iter().enumerate() {
                hetero.add_node(NodeId((off + i) as u32), 0);
                tokens.push(t);
                pool.push((b, off + i, 1.0 / n as f64));
            }
            for &(i, j, r) in &g.edges {
                hetero.add_edge(NodeId((off + i) as u32), NodeId((off + j) as u32), EdgeType(r), 1)?;
            }
            let t = Target::new(g, x);
            for a in 0..k {
                for c in a..k {
                    let col = self.schema.tri_index(a, c);
                    adj_target.set(b, col, if t.adj[a][c] { 1.0 } else { 0.0 });
                    let w = if a == c { 1.0 / k as f64 } else { 2.0 / (k * (k - 1)) as f64 };
                    adj_weight.set(b, col, w * inv_b);
                }
            }
            for &(a, c) in &t.nodes {
                node_rows.push(b * k + a);
                node_classes.push(c);
                node_weight.push(inv_b / n as f64);
            }
            if t.edges.is_empty() {
                edgeless += 1;
            }
            let m = t.edges.len() as f64;
            for &(a, c, r) in &t.edges {
                edge_rows.push(b * pairs + self.schema.pair_index(a, c));
                edge_classes.push(r);
                edge_weight.push(inv_b / m);
            }
        }
        let total = tokens.len();
        Ok(Batch {
            size,
            graph: RelGraph::new(&hetero, total, self.schema.relations, Aggregation::Mean)?,
            pool: Arc::new(SparseMatrix::from_triplets(size, total, pool)?),
            tokens,
            adj_target,
            adj_weight,
            node_rows,
            node_classes,
            node_weight,
            edge_rows,
            edge_classes,
            edge_weight,
            edgeless,
        })
    }

    fn encode_var(&self, tape: &mut Tape, params: &Params, batch: &Batch) -> Result<(Var, Var)> {
        let gnn = Self::gnn_config(&self.schema, &self.config);
        let emb = tape.param(params, "enc.emb")?;
        let mut h = tape.gather_rows(emb, &batch.tokens)?;
        for l in 0..2 {
            h = rgcn_layer(tape, params, &format!("enc.rgcn{l}"), h, &batch.graph, &gnn, Activation::Relu)?;
        }
        let pooled = tape.spmm(&batch.pool, h)?;
        let mut heads = [pooled; 2];
        for (out, name) in heads.iter_mut().zip(["enc.mu", "enc.logvar"]) {
            let w = tape.param(params, &format!("{name}.w"))?;
            let b = tape.param(params, &format!("{name}.b"))?;
            *out = tape.linear(pooled, w, b)?;
        }
        Ok((heads[0], heads[1]))
    }

    /// Adjacency probabilities, node logits and edge logits for each row of `z`.
    fn decode_var(&self, tape: &mut Tape, params: &Params, z: Var) -> Result<(Var, Var, Var)> {
        let layer = |tape: &mut Tape, name: &str, x: Var| -> Result<Var> {
            let w = tape.param(params, &format!("{name}.w"))?;
            let b = tape.param(params, &format!("{name}.b"))?;
            tape.linear(x, w, b)
        };
        let h = layer(tape, "dec.0", z)?;
        let h = tape.relu(h)?;
        let h = layer(tape, "dec.1", h)?;
        let h = tape.relu(h)?;
        let adj = layer(tape, "dec.adj", h)?;
        let adj = tape.sigmoid(adj)?;
        let node = layer(tape, "dec.node", h)?;
        let edge = layer(tape, "dec.edge", h)?;
        Ok((adj, node, edge))
    }

    fn reparameterize(tape: &mut Tape, mu: Var, logvar: Var, eps: &Tensor) -> Result<Var> {
        let half = tape.scale(logvar, 0.5)?;
        let std = tape.exp(half)?;
        let e = tape.constant(eps.clone());
        let noise = tape.mul(std, e)?;
        tape.add(mu, noise)
    }

    fn loss_from_batch(&self, tape: &mut Tape, params: &Params, batch: &Batch, eps: &Tensor) -> Result<(Var, LossParts)> {
        if eps.shape() != [batch.size, self.config.latent] {
            return Err(Error::shape("elbo eps", eps.shape(), &[batch.size, self.config.latent]));
        }
        let k = self.schema.k();
        let (mu, logvar) = self.encode_var(tape, params, batch)?;
        let z = Self::reparameterize(tape, mu, logvar, eps)?;
        let (adj, node, edge) = self.decode_var(tape, params, z)?;
        let la = tape.bce_weighted(adj, &batch.adj_target, &batch.adj_weight)?;
        let nl = tape.reshape(node, batch.size * k, self.schema.vocab)?;
        let nl = tape.gather_rows(nl, &batch.node_rows)?;
        let lf = tape.softmax_cross_entropy_weighted(nl, &batch.node_classes, &batch.node_weight)?;
        let kl = tape.gaussian_kl(mu, logvar)?;
        let kl = tape.scale(kl, 1.0 / batch.size as f64)?;
        let la_w = tape.scale(la, self.config.lambda_a)?;
        let lf_w = tape.scale(lf, self.config.lambda_f)?;
        let mut total = tape.add(la_w, lf_w)?;
        let mut parts = LossParts {
            adjacency: tape.scalar(la),
            node: tape.scalar(lf),
            kl: tape.scalar(kl),
            edgeless: batch.edgeless,
            ..LossParts::default()
        };
        if !batch.edge_rows.is_empty() {
            let el = tape.reshape(edge, batch.size * self.schema.pairs(), self.schema.relations)?;
            let el = tape.gather_rows(el, &batch.edge_rows)?;
            let le = tape.softmax_cross_entropy_weighted(el, &batch.edge_classes, &batch.edge_weight)?;
            parts.edge = tape.scalar(le);
            let le_w = tape.scale(le, self.config.lambda_e)?;
            total = tape.add(total, le_w)?;
        }
        total = tape.add(total, kl)?;
        parts.total = tape.scalar(total);
        Ok((total, parts))
    }

    /// Mean elbo of `graphs` under `params` with fixed noise `eps` (one row
    /// per graph). Assignments come from the model's own parameters.
    pub fn loss_var(&self, tape: &mut Tape, params: &Params, graphs: &[VaeGraph], eps: &Tensor) -> Result<(Var, LossParts)> {
        let xs = graphs.iter().map(|g| self.match_graph(g).map(|m| m.0)).collect::<Result<Vec<_>>>()?;
        let items: Vec<_> = graphs.iter().zip(&xs).collect();
        let batch = self.batch(&items)?;
        self.loss_from_batch(tape, params, &batch, eps)
    }

    /// Elbo terms of one graph with noise `eps`.
    pub fn elbo(&self, g: &VaeGraph, eps: &[f64]) -> Result<LossParts> {
        let mut tape = Tape::new();
        let e = Tensor::row(eps.to_vec());
        Ok(self.loss_var(&mut tape, &self.params, std::slice::from_ref(g), &e)?.1)
    }

    pub fn encode_with_eps(&self, g: &VaeGraph, eps: &[f64]) -> Result<LatentCode> {
        if eps.len() != self.config.latent {
            return Err(Error::shape("encode", &[eps.len()], &[self.config.latent]));
        }
        self.check_size(g)?;
        // the encoder ignores the assignment; any injective one will do
        let x = Assignment {
            k: self.schema.k(),
            rows: (0..g.node_count()).collect(),
        };
        let batch = self.batch(&[(g, &x)])?;
        let mut tape = Tape::new();
        let (mu, logvar) = self.encode_var(&mut tape, &self.params, &batch)?;
        let mu = tape.value(mu).data().to_vec();
        let logvar = tape.value(logvar).data().to_vec();
        let z = mu
            .iter()
            .zip(&logvar)
            .zip(eps)
            .map(|((m, l), e)| m + (0.5 * l).exp() * e)
            .collect();
        Ok(LatentCode {
            mu,
            logvar,
            eps: eps.to_vec(),
            z,
        })
    }

    /// Posterior code with `ε` drawn from a seeded standard normal.
    pub fn encode(&self, g: &VaeGraph, seed_value: u64) -> Result<LatentCode> {
        let mut rng = seed::stage_rng(seed_value, "vae-encode");
        let eps: Vec<f64> = (0..self.config.latent).map(|_| StandardNormal.sample(&mut rng)).collect();
        self.encode_with_eps(g, &eps)
    }

    pub fn decode(&self, z: &[f64]) -> Result<ProbGraph> {
        let zt = Tensor::row(z.to_vec());
        Ok(self.decode_batch(&zt)?.remove(0))
    }

    fn decode_batch(&self, z: &Tensor) -> Result<Vec<ProbGraph>> {
        if z.cols() != self.config.latent {
            return Err(Error::shape("decode", z.shape(), &[z.rows(), self.config.latent]));
        }
        let mut tape = Tape::new();
        let zv = tape.constant(z.clone());
        let (adj, node, edge) = self.decode_var(&mut tape, &self.params, zv)?;
        let (k, v, r) = (self.schema.k(), self.schema.vocab, self.schema.relations);
        let mut out = Vec::with_capacity(z.rows());
        for row in 0..z.rows() {
            let a = tape.value(adj).row_slice(row);
            let adj_m = Tensor::from_fn(k, k, |i, j| a[self.schema.tri_index(i, j)]);
            let nl = Tensor::new(vec![k, v], tape.value(node).row_slice(row).to_vec())?;
            let el = tape.value(edge).row_slice(row);
            let mut e = vec![1.0 / r as f64; k * k * r];
            for i in 0..k {
                for j in i + 1..k {
                    let p = self.schema.pair_index(i, j);
                    let probs = softmax_rows(&Tensor::row(el[p * r..(p + 1) * r].to_vec()));
                    for (x, y) in [(i, j), (j, i)] {
                        let s = (x * k + y) * r;
                        e[s..s + r].copy_from_slice(probs.data());
                    }
                }
            }
            out.push(ProbGraph {
                k,
                adj: adj_m,
                node: softmax_rows(&nl),
                edge_classes: r,
                edge: e,
            });
        }
        Ok(out)
    }

    /// Adam training on `graphs`; returns the mean elbo per epoch.
    pub fn fit(&mut self, graphs: &[VaeGraph]) -> Result<VaeReport> {
        if graphs.is_empty() {
            return Err(Error::EmptyInput("no training graphs".into()));
        }
        for g in graphs {
            self.check_size(g)?;
        }
        let identity: Vec<Option<Assignment>> = if self.config.match_mode == MatchMode::Identity {
            graphs
                .iter()
                .map(|g| identity_match(g, self.schema.k()))
                .collect::<Result<_>>()?
        } else {
            vec![None; graphs.len()]
        };
        let mut opt = Adam::new(AdamConfig {
            lr: self.config.lr,
            ..AdamConfig::default()
        });
        let mut order_rng = seed::stage_rng(self.config.seed, "vae-batches");
        let mut eps_rng = seed::stage_rng(self.config.seed, "vae-eps");
        let bs = if self.config.batch_size == 0 { graphs.len() } else { self.config.batch_size };
        let mut order: Vec<usize> = (0..graphs.len()).collect();
        let mut elbo_curve = Vec::with_capacity(self.config.epochs);
        let mut last = LossParts::default();
        let mut fallbacks = 0;
        for epoch in 0..self.config.epochs {
            order.shuffle(&mut order_rng);
            let mut sum = LossParts::default();
            for chunk in order.chunks(bs) {
                let mut xs = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    match &identity[i] {
                        Some(x) => xs.push(x.clone()),
                        None => {
                            let (x, fell_back) = self.match_graph(&graphs[i])?;
                            fallbacks += usize::from(fell_back);
                            xs.push(x);
                        }
                    }
                }
                let items: Vec<_> = chunk.iter().map(|&i| &graphs[i]).zip(&xs).collect();
                let batch = self.batch(&items)?;
                let eps = Tensor::from_fn(chunk.len(), self.config.latent, |_, _| StandardNormal.sample(&mut eps_rng));
                let mut tape = Tape::new();
                let (loss, parts) = self.loss_from_batch(&mut tape, &self.params, &batch, &eps)?;
                let w = chunk.len() as f64;
                sum.adjacency += parts.adjacency * w;
                sum.node += parts.node * w;
                sum.edge += parts.edge * w;
                sum.kl += parts.kl * w;
                sum.total += parts.total * w;
                sum.edgeless += parts.edgeless;
                let grads = tape.backward(loss, &self.params)?;
                opt.step(&mut self.params, &grads)?;
            }
            let n = graphs.len() as f64;
            last = LossParts {
                adjacency: sum.adjacency / n,
                node: sum.node / n,
                edge: sum.edge / n,
                kl: sum.kl / n,
                total: sum.total / n,
                edgeless: sum.edgeless,
            };
            elbo_curve.push(last.total);
            debug!("vae epoch {epoch} elbo {:.5}", last.total);
        }
        Ok(VaeReport {
            elbo_curve,
            last,
            fallbacks,
        })
    }

    /// Thresholds one decoded graph: slots with `Ã_aa > threshold`, edges
    /// with `Ã_ab > threshold` between kept slots, argmax attributes.
    pub fn discretize(&self, p: &ProbGraph, threshold: f64) -> VaeGraph {
        let kept: Vec<usize> = (0..p.k).filter(|&a| p.adj.get(a, a) > threshold).collect();
        let nodes = kept.iter().map(|&a| (a, argmax(p.node.row_slice(a)))).collect();
        let mut edges = Vec::new();
        for (i, &a) in kept.iter().enumerate() {
            for (j, &b) in kept.iter().enumerate().skip(i + 1) {
                if p.adj.get(a, b) > threshold {
                    edges.push((i, j, argmax(p.edge_probs(a, b)) as u16));
                }
            }
        }
        VaeGraph { nodes, edges }
    }

    /// Draws `z ~ N(0, I)` and keeps schema-valid graphs until `count` are
    /// found or `count · retry_cap` draws are spent.
    pub fn sample(&self, count: usize, seed_value: u64, threshold: f64, retry_cap: usize) -> Result<SampleReport> {
        let mut rng = seed::stage_rng(seed_value, "vae-sample");
        let budget = count.saturating_mul(retry_cap.max(1));
        let mut graphs = Vec::with_capacity(count);
        let mut attempts = 0;
        while graphs.len() < count && attempts < budget {
            let chunk = (budget - attempts).min(64);
            let z = Tensor::from_fn(chunk, self.config.latent, |_, _| StandardNormal.sample(&mut rng));
            for p in self.decode_batch(&z)? {
                if graphs.len() == count {
                    break;
                }
                attempts += 1;
                let g = self.discretize(&p, threshold);
                if self.schema.is_valid(&g) {
                    graphs.push(g);
                }
            }
        }
        let exhausted = graphs.len() < count;
        if exhausted {
            warn!("sampling stopped after {attempts} draws with {} of {count} valid graphs", graphs.len());
        }
        let rejected = attempts - graphs.len();
        Ok(SampleReport {
            graphs,
            attempts,
            rejected,
            rejection_rate: if attempts == 0 { 0.0 } else { rejected as f64 / attempts as f64 },
            exhausted,
        })
    }
}
