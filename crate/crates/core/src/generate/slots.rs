use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BehaviorSubgraph, EdgeType, SubEdge};
use crate::graphbuild::CompiledRule;
use crate::graphmetrics::LabeledGraph;
use crate::space::{AttributeSpace, NodeId};

/// Decoder layout derived from a meta-rule: one slot per node type, the
/// attribute-space tokens as node classes and the rule's edge types as edge
/// classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotSchema {
    /// Field id of each slot, in canonical node-type order.
    pub slot_fields: Vec<usize>,
    pub vocab: usize,
    pub relations: usize,
    /// Slot of each attribute token (`None` for fields outside the rule).
    pub token_slot: Vec<Option<usize>>,
    /// Licensed edge type per unordered slot pair, indexed by `pair_index`.
    pub pair_type: Vec<Option<u16>>,
}

/// A behavior in decoder terms: nodes as (slot, token) and edges between
/// node positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VaeGraph {
    pub nodes: Vec<(usize, usize)>,
    /// `(i, j, relation)` with `i < j` node positions.
    pub edges: Vec<(usize, usize, u16)>,
}

impl VaeGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

impl SlotSchema {
    pub fn new(rule: &CompiledRule, space: &AttributeSpace) -> Self {
        let k = rule.node_type_count();
        let token_slot = space
            .tokens()
            .iter()
            .map(|t| rule.slot_of_field(t.field_id))
            .collect();
        let mut pair_type = vec![None; k * k.saturating_sub(1) / 2];
        for a in 0..k {
            for b in a + 1..k {
                pair_type[pair_index(k, a, b)] = rule
                    .edge_between(rule.node_fields[a], rule.node_fields[b])
                    .map(|t| t.0);
            }
        }
        Self {
            slot_fields: rule.node_fields.clone(),
            vocab: space.len(),
            relations: rule.relation_count(),
            token_slot,
            pair_type,
        }
    }

    /// Number of decoder nodes `k`.
    pub fn k(&self) -> usize {
        self.slot_fields.len()
    }

    pub fn pairs(&self) -> usize {
        self.pair_type.len()
    }

    pub fn pair_index(&self, a: usize, b: usize) -> usize {
        pair_index(self.k(), a.min(b), a.max(b))
    }

    /// Position of `(a, b)`, `a ≤ b`, in the upper triangle with diagonal.
    pub fn tri_index(&self, a: usize, b: usize) -> usize {
        let (a, b) = (a.min(b), a.max(b));
        a * self.k() - a * a.saturating_sub(1) / 2 + (b - a)
    }

    pub fn tri_len(&self) -> usize {
        self.k() * (self.k() + 1) / 2
    }

    /// Converts a behavior; each node's slot is its node type.
    pub fn encode(&self, sg: &BehaviorSubgraph) -> Result<VaeGraph> {
        let mut nodes = Vec::with_capacity(sg.nodes.len());
        for &id in &sg.nodes {
            let slot = self
                .token_slot
                .get(id.index())
                .copied()
                .flatten()
                .ok_or_else(|| Error::Graph(format!("node {id} of {} has no decoder slot", sg.record_id)))?;
            nodes.push((slot, id.index()));
        }
        let pos = |id: NodeId| sg.nodes.iter().position(|&n| n == id);
        let mut edges = Vec::with_capacity(sg.edges.len());
        for e in &sg.edges {
            let (Some(i), Some(j)) = (pos(e.a), pos(e.b)) else {
                return Err(Error::Graph(format!("behavior {} has a dangling edge", sg.record_id)));
            };
            if e.edge_type.index() >= self.relations {
                return Err(Error::Graph(format!("edge type {} out of range", e.edge_type.0)));
            }
            edges.push((i.min(j), i.max(j), e.edge_type.0));
        }
        edges.sort_unstable();
        Ok(VaeGraph { nodes, edges })
    }

    /// Checks the graph against the meta-rule: at least one node, one node
    /// per slot, each token of its slot's field, and every edge licensed
    /// with the licensed type.
    pub fn check(&self, g: &VaeGraph) -> std::result::Result<(), String> {
        if g.nodes.is_empty() {
            return Err("no nodes".into());
        }
        let mut seen = BTreeSet::new();
        for &(slot, token) in &g.nodes {
            if !seen.insert(slot) {
                return Err(format!("slot {slot} used twice"));
            }
            if self.token_slot.get(token).copied().flatten() != Some(slot) {
                return Err(format!("token {token} does not belong to slot {slot}"));
            }
        }
        for &(i, j, r) in &g.edges {
            let (a, b) = (g.nodes[i].0, g.nodes[j].0);
            if a == b || self.pair_type[self.pair_index(a, b)] != Some(r) {
                return Err(format!("edge type {r} not licensed between slots {a} and {b}"));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, g: &VaeGraph) -> bool {
        self.check(g).is_ok()
    }

    /// Nodes come out ordered by (field, token id), like built subgraphs.
    pub fn to_subgraph(&self, g: &VaeGraph, record_id: &str) -> BehaviorSubgraph {
        let id = |i: usize| NodeId(g.nodes[i].1 as u32);
        let mut order: Vec<usize> = (0..g.nodes.len()).collect();
        order.sort_by_key(|&i| (self.slot_fields[g.nodes[i].0], g.nodes[i].1));
        let mut edges: Vec<SubEdge> = g
            .edges
            .iter()
            .map(|&(i, j, r)| SubEdge {
                a: id(i).min(id(j)),
                b: id(i).max(id(j)),
                edge_type: EdgeType(r),
            })
            .collect();
        edges.sort_unstable();
        BehaviorSubgraph {
            record_id: record_id.to_string(),
            nodes: order.into_iter().map(id).collect(),
            edges,
        }
    }

    /// `k × k` binary adjacency indexed by slot; absent slots stay empty.
    pub fn slot_adjacency(&self, g: &VaeGraph) -> Vec<Vec<bool>> {
        let k = self.k();
        let mut m = vec![vec![false; k]; k];
        for &(i, j, _) in &g.edges {
            let (a, b) = (g.nodes[i].0, g.nodes[j].0);
            m[a][b] = true;
            m[b][a] = true;
        }
        m
    }

    /// Labeled form with nodes in slot order, for the similarity metrics.
    pub fn to_labeled(&self, g: &VaeGraph, space: &AttributeSpace) -> Result<LabeledGraph> {
        let mut order: Vec<usize> = (0..g.nodes.len()).collect();
        order.sort_by_key(|&i| g.nodes[i]);
        let mut pos = vec![0; g.nodes.len()];
        for (p, &i) in order.iter().enumerate() {
            pos[i] = p;
        }
        let labels = order
            .iter()
            .map(|&i| {
                let (slot, token) = g.nodes[i];
                let value = space
                    .token(NodeId(token as u32))
                    .map(|t| t.value_token.clone())
                    .ok_or_else(|| Error::NotFound(format!("token {token}")))?;
                Ok((slot, value))
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledGraph::new(labels, g.edges.iter().map(|&(i, j, r)| (pos[i], pos[j], r)))
    }
}

fn pair_index(k: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < k);
    a * (2 * k - a - 1) / 2 + (b - a - 1)
}
