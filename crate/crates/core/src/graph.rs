//! Typed, weighted, undirected graphs over attribute nodes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{AttributeSpace, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeType(pub u16);

impl EdgeType {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Undirected edge key with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub a: NodeId,
    pub b: NodeId,
    pub edge_type: EdgeType,
}

impl EdgeKey {
    pub fn new(u: NodeId, v: NodeId, edge_type: EdgeType) -> Result<Self> {
        if u == v {
            return Err(Error::Graph(format!("self-loop on {u}")));
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        Ok(Self { a, b, edge_type })
    }
}

/// Heterogeneous multigraph: node type tags plus typed edges whose weight is
/// the number of behaviors that produced them.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "GraphRepr", into = "GraphRepr")]
pub struct HeteroGraph {
    node_types: BTreeMap<NodeId, usize>,
    edges: BTreeMap<EdgeKey, u64>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl PartialEq for HeteroGraph {
    fn eq(&self, other: &Self) -> bool {
        self.node_types == other.node_types && self.edges == other.edges
    }
}

impl HeteroGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId, node_type: usize) {
        self.node_types.entry(id).or_insert(node_type);
        self.adjacency.entry(id).or_default();
    }

    /// Adds `weight` to the (u, v, type) edge. Both endpoints must exist.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, edge_type: EdgeType, weight: u64) -> Result<()> {
        if weight == 0 {
            return Err(Error::Graph("edge weight must be at least 1".into()));
        }
        for n in [u, v] {
            if !self.node_types.contains_key(&n) {
                return Err(Error::Graph(format!("dangling edge endpoint {n}")));
            }
        }
        let key = EdgeKey::new(u, v, edge_type)?;
        *self.edges.entry(key).or_insert(0) += weight;
        self.adjacency.entry(u).or_default().insert(v);
        self.adjacency.entry(v).or_default().insert(u);
        Ok(())
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node_types.contains_key(&id)
    }

    pub fn node_type(&self, id: NodeId) -> Option<usize> {
        self.node_types.get(&id).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.node_types.iter().map(|(&n, &t)| (n, t))
    }

    pub fn node_count(&self) -> usize {
        self.node_types.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeKey, u64)> + '_ {
        self.edges.iter().map(|(&k, &w)| (k, w))
    }

    pub fn weight(&self, key: &EdgeKey) -> u64 {
        self.edges.get(key).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Distinct neighbors regardless of edge type.
    pub fn adjacent(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    /// Breadth-first hop distances from `start`, up to `depth` hops.
    pub fn neighbors(&self, start: NodeId, depth: usize) -> Result<BTreeMap<NodeId, usize>> {
        if !self.contains(start) {
            return Err(Error::NotFound(format!("node {start}")));
        }
        let mut dist = BTreeMap::from([(start, 0usize)]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == depth {
                continue;
            }
            for v in self.adjacent(u) {
                if !dist.contains_key(&v) {
                    dist.insert(v, d + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Multi-source variant: distances to the nearest of `starts`.
    pub fn neighbors_of_set(&self, starts: &[NodeId], depth: usize) -> Result<BTreeMap<NodeId, usize>> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::new();
        for &s in starts {
            if !self.contains(s) {
                return Err(Error::NotFound(format!("node {s}")));
            }
            if dist.insert(s, 0).is_none() {
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == depth {
                continue;
            }
            for v in self.adjacent(u) {
                if !dist.contains_key(&v) {
                    dist.insert(v, d + 1);
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Checks that the adjacency index mirrors the edge list.
    pub fn check_consistency(&self) -> Result<()> {
        let mut expected: BTreeMap<NodeId, BTreeSet<NodeId>> =
            self.node_types.keys().map(|&n| (n, BTreeSet::new())).collect();
        for (k, &w) in &self.edges {
            if w == 0 || k.a >= k.b {
                return Err(Error::Graph(format!("bad edge {k:?} weight {w}")));
            }
            expected.entry(k.a).or_default().insert(k.b);
            expected.entry(k.b).or_default().insert(k.a);
        }
        if expected != self.adjacency {
            return Err(Error::Graph("adjacency index out of sync".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: GraphRepr = serde_json::from_str(s)?;
        Self::try_from_repr(repr)
    }

    fn try_from_repr(repr: GraphRepr) -> Result<Self> {
        let mut g = HeteroGraph::new();
        for n in repr.nodes {
            g.add_node(n.id, n.node_type);
        }
        for e in repr.edges {
            g.add_edge(e.src, e.dst, e.edge_type, e.weight)?;
        }
        Ok(g)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    nodes: Vec<GraphNodeRepr>,
    edges: Vec<GraphEdgeRepr>,
}

#[derive(Serialize, Deserialize)]
struct GraphNodeRepr {
    id: NodeId,
    #[serde(rename = "type")]
    node_type: usize,
}

#[derive(Serialize, Deserialize)]
struct GraphEdgeRepr {
    src: NodeId,
    dst: NodeId,
    #[serde(rename = "type")]
    edge_type: EdgeType,
    weight: u64,
}

impl From<HeteroGraph> for GraphRepr {
    fn from(g: HeteroGraph) -> Self {
        GraphRepr {
            nodes: g
                .node_types
                .into_iter()
                .map(|(id, node_type)| GraphNodeRepr { id, node_type })
                .collect(),
            edges: g
                .edges
                .into_iter()
                .map(|(k, weight)| GraphEdgeRepr {
                    src: k.a,
                    dst: k.b,
                    edge_type: k.edge_type,
                    weight,
                })
                .collect(),
        }
    }
}

impl From<GraphRepr> for HeteroGraph {
    // Serde has no fallible `from`; invalid edges are dropped here and
    // `HeteroGraph::from_json` is the validating entry point.
    fn from(r: GraphRepr) -> Self {
        let mut g = HeteroGraph::new();
        for n in r.nodes {
            g.add_node(n.id, n.node_type);
        }
        for e in r.edges {
            let _ = g.add_edge(e.src, e.dst, e.edge_type, e.weight);
        }
        g
    }
}

/// Undirected typed edge of one behavior (`a < b`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub edge_type: EdgeType,
}

/// One behavior concretized as attribute nodes and the edges its meta-rule
/// licenses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorSubgraph {
    pub record_id: String,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<SubEdge>,
}

impl BehaviorSubgraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Checks node membership in `space` and edge endpoints in the node set.
    pub fn validate(&self, space: &AttributeSpace) -> Result<()> {
        for n in &self.nodes {
            if n.index() >= space.len() {
                return Err(Error::Graph(format!(
                    "behavior {} references unknown node {n}",
                    self.record_id
                )));
            }
        }
        let set: BTreeSet<NodeId> = self.nodes.iter().copied().collect();
        if set.len() != self.nodes.len() {
            return Err(Error::Graph(format!("behavior {} repeats a node", self.record_id)));
        }
        for e in &self.edges {
            if e.a >= e.b || !set.contains(&e.a) || !set.contains(&e.b) {
                return Err(Error::Graph(format!(
                    "behavior {} has edge {e:?} outside its node set",
                    self.record_id
                )));
            }
        }
        Ok(())
    }

    /// Standalone graph with node types taken from `space`.
    pub fn to_hetero(&self, space: &AttributeSpace) -> Result<HeteroGraph> {
        let mut g = HeteroGraph::new();
        for &n in &self.nodes {
            let t = space
                .node_type(n)
                .ok_or_else(|| Error::NotFound(format!("node {n}")))?;
            g.add_node(n, t);
        }
        for e in &self.edges {
            g.add_edge(e.a, e.b, e.edge_type, 1)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn graph(nodes: u32, edges: &[(u32, u32)]) -> HeteroGraph {
        let mut g = HeteroGraph::new();
        for i in 0..nodes {
            g.add_node(n(i), 0);
        }
        for &(u, v) in edges {
            g.add_edge(n(u), n(v), EdgeType(0), 1).unwrap();
        }
        g
    }

    #[test]
    fn path_bfs() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let d = g.neighbors(n(0), 2).unwrap();
        assert_eq!(d, BTreeMap::from([(n(0), 0), (n(1), 1), (n(2), 2)]));
        let d1 = g.neighbors(n(0), 1).unwrap();
        assert_eq!(d1.len(), 2);
    }

    #[test]
    fn isolated_node() {
        let g = graph(1, &[]);
        assert_eq!(g.neighbors(n(0), 6).unwrap(), BTreeMap::from([(n(0), 0)]));
    }

    #[test]
    fn triangle_distances() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let d = g.neighbors(n(0), 1).unwrap();
        assert_eq!(d, BTreeMap::from([(n(0), 0), (n(1), 1), (n(2), 1)]));
    }

    #[test]
    fn unknown_node_not_found() {
        let g = graph(1, &[]);
        assert!(matches!(g.neighbors(n(9), 1), Err(Error::NotFound(_))));
    }

    #[test]
    fn self_loops_and_dangling_rejected() {
        let mut g = graph(2, &[]);
        assert!(g.add_edge(n(0), n(0), EdgeType(0), 1).is_err());
        assert!(g.add_edge(n(0), n(7), EdgeType(0), 1).is_err());
        assert!(g.add_edge(n(0), n(1), EdgeType(0), 0).is_err());
    }

    #[test]
    fn weights_accumulate_per_type() {
        let mut g = graph(2, &[(0, 1), (1, 0)]);
        g.add_edge(n(0), n(1), EdgeType(1), 1).unwrap();
        assert_eq!(g.weight(&EdgeKey::new(n(1), n(0), EdgeType(0)).unwrap()), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.total_weight(), 3);
        g.check_consistency().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let mut g = graph(4, &[(0, 1), (1, 2), (1, 2)]);
        g.add_edge(n(2), n(3), EdgeType(3), 5).unwrap();
        let json = g.to_json().unwrap();
        let back = HeteroGraph::from_json(&json).unwrap();
        assert_eq!(back, g);
        back.check_consistency().unwrap();
    }

    proptest! {
        #[test]
        fn bfs_triangle_inequality(
            edges in proptest::collection::vec((0u32..12, 0u32..12), 0..30),
            triples in proptest::collection::vec((0u32..12, 0u32..12, 0u32..12), 1..10),
        ) {
            let mut g = graph(12, &[]);
            for (u, v) in edges {
                if u != v {
                    g.add_edge(n(u), n(v), EdgeType(0), 1).unwrap();
                }
            }
            g.check_consistency().unwrap();
            let all: Vec<BTreeMap<NodeId, usize>> =
                (0..12).map(|i| g.neighbors(n(i), 12).unwrap()).collect();
            for (u, v, w) in triples {
                let (du, dv) = (&all[u as usize], &all[v as usize]);
                if let (Some(&uv), Some(&vw)) = (du.get(&n(v)), dv.get(&n(w))) {
                    let uw = du.get(&n(w)).copied().expect("reachable through v");
                    prop_assert!(uw <= uv + vw);
                }
            }
        }
    }
}
