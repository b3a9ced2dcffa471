use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BehaviorSubgraph;
use crate::space::AttributeSpace;

/// Node label: node type plus value token.
pub type Label = (usize, String);

/// Small attribute-labeled undirected graph. Node order is meaningful for
/// adjacency-based metrics and is expected to follow the canonical
/// node-type order of the meta-rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub labels: Vec<Label>,
    /// `(a, b, edge type)` with `a < b`, sorted, no duplicates.
    pub edges: Vec<(usize, usize, u16)>,
}

impl LabeledGraph {
    pub fn new(labels: Vec<Label>, edges: impl IntoIterator<Item = (usize, usize, u16)>) -> Result<Self> {
        let n = labels.len();
        let mut set = BTreeSet::new();
        for (u, v, t) in edges {
            if u == v || u >= n || v >= n {
                return Err(Error::Graph(format!("edge ({u}, {v}) invalid for {n} nodes")));
            }
            set.insert((u.min(v), u.max(v), t));
        }
        Ok(Self {
            labels,
            edges: set.into_iter().collect(),
        })
    }

    /// Unlabeled graph: every node gets label `(0, "")`.
    pub fn unlabeled(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(vec![(0, String::new()); n], edges.into_iter().map(|(a, b)| (a, b, 0)))
    }

    /// Converts a behavior; nodes keep the behavior's order.
    pub fn from_subgraph(sg: &BehaviorSubgraph, space: &AttributeSpace) -> Result<Self> {
        let mut labels = Vec::with_capacity(sg.nodes.len());
        for &id in &sg.nodes {
            let tok = space
                .token(id)
                .ok_or_else(|| Error::NotFound(format!("node {id}")))?;
            labels.push((tok.field_id, tok.value_token.clone()));
        }
        let pos = |id| sg.nodes.iter().position(|&n| n == id);
        let mut edges = Vec::with_capacity(sg.edges.len());
        for e in &sg.edges {
            match (pos(e.a), pos(e.b)) {
                (Some(a), Some(b)) => edges.push((a, b, e.edge_type.0)),
                _ => return Err(Error::Graph(format!("behavior {} has a dangling edge", sg.record_id))),
            }
        }
        Self::new(labels, edges)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Binary adjacency matrix (edge types ignored).
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.labels.len();
        let mut m = vec![vec![false; n]; n];
        for &(a, b, _) in &self.edges {
            m[a][b] = true;
            m[b][a] = true;
        }
        m
    }

    /// Simple-graph neighbor lists (edge types ignored).
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.labels.len()];
        for &(a, b, _) in &self.edges {
            nb[a].push(b);
            nb[b].push(a);
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.labels.len();
        let mut labels = vec![(0, String::new()); n];
        for (i, l) in self.labels.iter().enumerate() {
            labels[perm[i]] = l.clone();
        }
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(a, b, t)| {
                let (x, y) = (perm[a], perm[b]);
                (x.min(y), x.max(y), t)
            })
            .collect();
        edges.sort_unstable();
        Self { labels, edges }
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        CanonicalForm::of(self)
    }
}

/// Isomorphism-invariant form of a labeled graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub labels: Vec<Label>,
    pub edges: Vec<(usize, usize, u16)>,
}

impl CanonicalForm {
    /// Nodes are ordered by label and a refinement key (degree and the
    /// multiset of neighbor labels with edge types). Nodes with equal keys
    /// form tie blocks; every ordering inside the blocks is tried and the
    /// lexicographically smallest edge list wins.
    pub fn of(g: &LabeledGraph) -> Self {
        let n = g.labels.len();
        let mut incident: Vec<Vec<(&Label, u16)>> = vec![Vec::new(); n];
        for &(a, b, t) in &g.edges {
            incident[a].push((&g.labels[b], t));
            incident[b].push((&g.labels[a], t));
        }
        for l in &mut incident {
            l.sort();
        }
        let mut order: Vec<usize> = (0..n).collect();
        let key = |i: usize| (&g.labels[i], incident[i].len(), &incident[i]);
        order.sort_by(|&x, &y| key(x).cmp(&key(y)));
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        let mut s = 0;
        for i in 1..=n {
            if i == n || key(order[i]) != key(order[s]) {
                if i - s > 1 {
                    blocks.push((s, i));
                }
                s = i;
            }
        }

        let labels: Vec<Label> = order.iter().map(|&i| g.labels[i].clone()).collect();
        let mut best: Option<Vec<(usize, usize, u16)>> = None;
        let mut pos = vec![0; n];
        loop {
            for (p, &i) in order.iter().enumerate() {
                pos[i] = p;
            }
            let mut edges: Vec<_> = g
                .edges
                .iter()
                .map(|&(a, b, t)| (pos[a].min(pos[b]), pos[a].max(pos[b]), t))
                .collect();
            edges.sort_unstable();
            if best.as_ref().is_none_or(|b| edges < *b) {
                best = Some(edges);
            }
            if !next_block_permutation(&mut order, &blocks) {
                break;
            }
        }
        Self {
            labels,
            edges: best.unwrap_or_default(),
        }
    }
}

/// Advances the product of per-block permutations like an odometer. Each
/// block starts sorted ascending, so a block that wraps is sorted again.
fn next_block_permutation(order: &mut [usize], blocks: &[(usize, usize)]) -> bool {
    for &(s, e) in blocks.iter().rev() {
        if next_permutation(&mut order[s..e]) {
            return true;
        }
    }
    false
}

/// Lexicographic next permutation; on the last one, sorts and returns false.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        v.reverse();
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
