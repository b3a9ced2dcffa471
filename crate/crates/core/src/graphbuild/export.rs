//! DOT and JSON exports for plotting attribute-space structures.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BehaviorSubgraph, HeteroGraph};
use crate::space::{AttributeSpace, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisNode {
    pub id: NodeId,
    pub label: String,
    /// Occurrence count in the attribute space.
    pub size: u64,
    /// Hop distance from the focal behavior, if within the requested depth.
    pub depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub edge_type: u16,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisPayload {
    pub focal_record: String,
    pub max_depth: usize,
    pub nodes: Vec<VisNode>,
    pub edges: Vec<VisEdge>,
}

impl VisPayload {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Colors the graph by hop distance from the focal behavior's nodes.
pub fn export_vis(
    graph: &HeteroGraph,
    space: &AttributeSpace,
    focal: &BehaviorSubgraph,
    depth: usize,
) -> Result<VisPayload> {
    if focal.nodes.is_empty() {
        return Err(Error::EmptyBehavior(focal.record_id.clone()));
    }
    let dist = graph.neighbors_of_set(&focal.nodes, depth)?;
    let nodes = graph
        .nodes()
        .map(|(id, _)| VisNode {
            id,
            label: space.label(id),
            size: space.count(id),
            depth: dist.get(&id).copied(),
        })
        .collect();
    let edges = graph
        .edges()
        .map(|(k, w)| VisEdge {
            src: k.a,
            dst: k.b,
            edge_type: k.edge_type.0,
            weight: w,
        })
        .collect();
    Ok(VisPayload {
        focal_record: focal.record_id.clone(),
        max_depth: depth,
        nodes,
        edges,
    })
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Undirected DOT text. Node labels come from `space` when given.
pub fn graph_to_dot(graph: &HeteroGraph, space: Option<&AttributeSpace>) -> String {
    let mut s = String::from("graph bms {\n");
    for (id, ty) in graph.nodes() {
        let label = space.map_or_else(|| id.to_string(), |sp| sp.label(id));
        let _ = writeln!(s, "  n{} [label={}, type={ty}];", id.0, quote(&label));
    }
    for (k, w) in graph.edges() {
        let _ = writeln!(
            s,
            "  n{} -- n{} [type={}, weight={w}, penwidth={:.3}];",
            k.a.0,
            k.b.0,
            k.edge_type.0,
            1.0 + (w as f64).ln()
        );
    }
    s.push_str("}\n");
    s
}

/// DOT text for a payload: node width follows the occurrence count, fill
/// gets lighter with distance from the focal behavior.
pub fn vis_to_dot(payload: &VisPayload) -> String {
    let max_size = payload.nodes.iter().map(|n| n.size).max().unwrap_or(1).max(1) as f64;
    let mut s = String::from("graph bms {\n  node [shape=circle, style=filled, fixedsize=true];\n");
    for n in &payload.nodes {
        let width = 0.2 + 0.8 * (n.size as f64 / max_size).sqrt();
        let color = match n.depth {
            Some(d) => {
                let t = d as f64 / payload.max_depth.max(1) as f64;
                let v = (60.0 + 180.0 * t).round() as u8;
                format!("#{:02x}{:02x}ff", v, v)
            }
            None => "#eeeeee".to_string(),
        };
        let _ = writeln!(
            s,
            "  n{} [label={}, width={width:.3}, fillcolor={}];",
            n.id.0,
            quote(&n.label),
            quote(&color)
        );
    }
    for e in &payload.edges {
        let _ = writeln!(s, "  n{} -- n{} [weight={}];", e.src.0, e.dst.0, e.weight);
    }
    s.push_str("}\n");
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn export_dot(graph: &HeteroGraph, space: Option<&AttributeSpace>, path: &Path) -> Result<()> {
    write_text(path, &graph_to_dot(graph, space))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeType;

    fn triangle() -> (AttributeSpace, HeteroGraph) {
        let mut space = AttributeSpace::new(["a", "b", "c"]);
        let ids = space.ingest_behavior([(0, "x\"q"), (1, "y"), (2, "z")]).unwrap();
        let mut g = HeteroGraph::new();
        for &i in &ids {
            g.add_node(i, space.node_type(i).unwrap());
        }
        g.add_edge(ids[0], ids[1], EdgeType(0), 1).unwrap();
        g.add_edge(ids[1], ids[2], EdgeType(0), 2).unwrap();
        g.add_edge(ids[0], ids[2], EdgeType(0), 1).unwrap();
        (space, g)
    }

    #[test]
    fn triangle_dot_statements() {
        let (space, g) = triangle();
        let dot = graph_to_dot(&g, Some(&space));
        assert_eq!(dot.matches(" -- ").count(), 3);
        assert_eq!(dot.lines().filter(|l| l.contains("[label=")).count(), 3);
        assert!(dot.contains(r#"a=x\"q"#));
    }

    #[test]
    fn isolated_focal_node() {
        let mut space = AttributeSpace::new(["a"]);
        let ids = space.ingest_behavior([(0, "x")]).unwrap();
        let mut g = HeteroGraph::new();
        g.add_node(ids[0], 0);
        let focal = BehaviorSubgraph {
            record_id: "r".into(),
            nodes: ids.clone(),
            edges: vec![],
        };
        let p = export_vis(&g, &space, &focal, 6).unwrap();
        assert_eq!(p.nodes.len(), 1);
        assert_eq!(p.nodes.iter().filter(|n| n.depth.is_some()).count(), 1);
        assert_eq!(p.nodes[0].size, 1);
    }

    #[test]
    fn payload_json_round_trip() {
        let (space, g) = triangle();
        let focal = BehaviorSubgraph {
            record_id: "r".into(),
            nodes: vec![NodeId(0)],
            edges: vec![],
        };
        let p = export_vis(&g, &space, &focal, 1).unwrap();
        assert_eq!(VisPayload::from_json(&p.to_json().unwrap()).unwrap(), p);
        assert!(vis_to_dot(&p).starts_with("graph bms {"));
    }
}
