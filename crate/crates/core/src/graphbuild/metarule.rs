use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeType;

/// Edge type used for every pair under the default clique rule.
pub const CLIQUE_EDGE: &str = "co";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub a: String,
    pub b: String,
    #[serde(rename = "type")]
    pub edge_type: String,
}

/// Declarative mapping from attribute fields to node types and from field
/// pairs to edge types, as written in a config file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaRule {
    pub name: String,
    /// Fields that become nodes. Their order is the canonical node-type
    /// order. Empty means "every schema field".
    #[serde(default)]
    pub nodes: Vec<String>,
    /// Explicit edges. When non-empty they override `clique`.
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default = "default_true")]
    pub clique: bool,
}

fn default_true() -> bool {
    true
}

pub const BUILTIN_RULES: &[&str] = &["crime", "crime-vis", "fraud", "zhihu"];

impl MetaRule {
    pub fn clique(name: &str) -> Self {
        Self {
            name: name.to_string(),
            nodes: Vec::new(),
            edges: Vec::new(),
            clique: true,
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "crime" => include_str!("../../configs/crime.rule.toml"),
            "crime-vis" => include_str!("../../configs/crime-vis.rule.toml"),
            "fraud" => include_str!("../../configs/fraud.rule.toml"),
            "zhihu" => include_str!("../../configs/zhihu.rule.toml"),
            other => return Err(Error::NotFound(format!("meta-rule {other:?}"))),
        };
        Self::from_toml(text)
    }

    pub fn load(name_or_path: &str) -> Result<Self> {
        if BUILTIN_RULES.contains(&name_or_path) {
            return Self::builtin(name_or_path);
        }
        Self::from_path(Path::new(name_or_path))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Resolves field names against `fields` (the schema's attribute fields).
    pub fn compile(&self, fields: &[String]) -> Result<CompiledRule> {
        let lookup = |name: &str| {
            fields
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| Error::Rule(format!("rule {} references unknown field {name:?}", self.name)))
        };
        let node_fields: Vec<usize> = if self.nodes.is_empty() {
            (0..fields.len()).collect()
        } else {
            self.nodes.iter().map(|n| lookup(n)).collect::<Result<_>>()?
        };
        let mut dedup = node_fields.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != node_fields.len() {
            return Err(Error::Rule(format!("rule {} lists a node field twice", self.name)));
        }

        let mut edge_types: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        for e in &self.edges {
            let (a, b) = (lookup(&e.a)?, lookup(&e.b)?);
            for (name, f) in [(&e.a, a), (&e.b, b)] {
                if !node_fields.contains(&f) {
                    return Err(Error::Rule(format!(
                        "edge {} uses {name:?}, which is not a node type",
                        e.edge_type
                    )));
                }
            }
            let ty = match edge_types.iter().position(|t| t == &e.edge_type) {
                Some(i) => i,
                None => {
                    edge_types.push(e.edge_type.clone());
                    edge_types.len() - 1
                }
            };
            let ty = EdgeType(ty as u16);
            if edges.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a)) {
                return Err(Error::Rule(format!("field pair {}-{} declared twice", e.a, e.b)));
            }
            edges.push((a, b, ty));
        }
        let clique = self.edges.is_empty() && self.clique;
        if clique {
            edge_types.push(CLIQUE_EDGE.to_string());
        }
        Ok(CompiledRule {
            name: self.name.clone(),
            fields: fields.to_vec(),
            node_fields,
            edges,
            edge_types,
            clique,
        })
    }
}

/// A meta-rule resolved against a concrete field list.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledRule {
    pub name: String,
    pub fields: Vec<String>,
    /// Node-type order: position `a` holds the field id of node type `a`.
    pub node_fields: Vec<usize>,
    pub edges: Vec<(usize, usize, EdgeType)>,
    pub edge_types: Vec<String>,
    pub clique: bool,
}

impl CompiledRule {
    pub fn node_type_count(&self) -> usize {
        self.node_fields.len()
    }

    pub fn relation_count(&self) -> usize {
        self.edge_types.len().max(1)
    }

    /// Canonical slot of a field, if the field is a node type.
    pub fn slot_of_field(&self, field_id: usize) -> Option<usize> {
        self.node_fields.iter().position(|&f| f == field_id)
    }

    /// Edge type licensed between two fields, if any.
    pub fn edge_between(&self, fa: usize, fb: usize) -> Option<EdgeType> {
        if fa == fb {
            return None;
        }
        if self.clique {
            let both = self.node_fields.contains(&fa) && self.node_fields.contains(&fb);
            return both.then_some(EdgeType(0));
        }
        self.edges
            .iter()
            .find(|&&(a, b, _)| (a, b) == (fa, fb) || (a, b) == (fb, fa))
            .map(|&(_, _, t)| t)
    }
}
