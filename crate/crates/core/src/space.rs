//! The behavioral attribute space: every distinct (field, value) token seen
//! across a dataset, interned to a dense node id.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense id of an attribute node inside an [`AttributeSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node id overflow"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Trim and case-fold. Idempotent.
pub fn normalize_token(raw: &str) -> String {
    raw.trim().to_lowercase()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeToken {
    pub field_id: usize,
    pub value_token: String,
}

impl AttributeToken {
    pub fn new(field_id: usize, raw: &str) -> Result<Self> {
        let value_token = normalize_token(raw);
        if value_token.is_empty() {
            return Err(Error::MissingValue {
                field: field_id.to_string(),
            });
        }
        Ok(Self {
            field_id,
            value_token,
        })
    }
}

/// Registry of attribute nodes with occurrence counts.
///
/// Ids are allocated densely in first-seen order. Counts only move through
/// [`AttributeSpace::ingest_behavior`], never through lookups.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(from = "SpaceRepr", into = "SpaceRepr")]
pub struct AttributeSpace {
    fields: Vec<String>,
    tokens: Vec<AttributeToken>,
    counts: Vec<u64>,
    index: HashMap<AttributeToken, NodeId>,
}

impl PartialEq for AttributeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.fields == other.fields && self.tokens == other.tokens && self.counts == other.counts
    }
}

impl AttributeSpace {
    pub fn new<S: Into<String>>(fields: impl IntoIterator<Item = S>) -> Self {
        Self {
            fields: fields.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn field_id(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == name)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn check_field(&self, field_id: usize) -> Result<()> {
        if field_id >= self.fields.len() {
            return Err(Error::NotFound(format!(
                "field id {field_id} (space has {} fields)",
                self.fields.len()
            )));
        }
        Ok(())
    }

    /// Returns the id of `(field_id, normalize(raw))`, allocating the next
    /// dense id on first sight.
    pub fn intern(&mut self, field_id: usize, raw: &str) -> Result<NodeId> {
        self.check_field(field_id)?;
        let token = AttributeToken::new(field_id, raw).map_err(|_| Error::MissingValue {
            field: self.fields[field_id].clone(),
        })?;
        if let Some(&id) = self.index.get(&token) {
            return Ok(id);
        }
        let id = NodeId::from(self.tokens.len());
        self.index.insert(token.clone(), id);
        self.tokens.push(token);
        self.counts.push(0);
        Ok(id)
    }

    pub fn lookup(&self, field_id: usize, raw: &str) -> Option<NodeId> {
        let token = AttributeToken::new(field_id, raw).ok()?;
        self.index.get(&token).copied()
    }

    /// Interns every token of one behavior and bumps the count of each
    /// distinct id once. Returns the ids in input order.
    pub fn ingest_behavior<'a>(
        &mut self,
        tokens: impl IntoIterator<Item = (usize, &'a str)>,
    ) -> Result<Vec<NodeId>> {
        let ids = tokens
            .into_iter()
            .map(|(f, v)| self.intern(f, v))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = ids.clone();
        seen.sort_unstable();
        seen.dedup();
        for id in seen {
            self.counts[id.index()] += 1;
        }
        Ok(ids)
    }

    pub fn token(&self, id: NodeId) -> Option<&AttributeToken> {
        self.tokens.get(id.index())
    }

    pub fn count(&self, id: NodeId) -> u64 {
        self.counts.get(id.index()).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn node_type(&self, id: NodeId) -> Option<usize> {
        self.token(id).map(|t| t.field_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.tokens.len()).map(NodeId::from)
    }

    pub fn tokens(&self) -> &[AttributeToken] {
        &self.tokens
    }

    /// Ids belonging to one field, in id order.
    pub fn ids_of_field(&self, field_id: usize) -> Vec<NodeId> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.field_id == field_id)
            .map(|(i, _)| NodeId::from(i))
            .collect()
    }

    /// Human readable `field=token` label.
    pub fn label(&self, id: NodeId) -> String {
        match self.token(id) {
            Some(t) => format!("{}={}", self.fields[t.field_id], t.value_token),
            None => id.to_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let space: Self = serde_json::from_str(s)?;
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<()> {
        if self.index.len() != self.tokens.len() {
            return Err(Error::Parse("duplicate (field, token) pair in space".into()));
        }
        for t in &self.tokens {
            self.check_field(t.field_id)?;
            if t.value_token.is_empty() {
                return Err(Error::Parse("empty token in space".into()));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    fields: Vec<String>,
    nodes: Vec<NodeRepr>,
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    id: u32,
    field: usize,
    token: String,
    count: u64,
}

impl From<AttributeSpace> for SpaceRepr {
    fn from(s: AttributeSpace) -> Self {
        let nodes = s
            .tokens
            .into_iter()
            .zip(s.counts)
            .enumerate()
            .map(|(i, (t, count))| NodeRepr {
                id: i as u32,
                field: t.field_id,
                token: t.value_token,
                count,
            })
            .collect();
        SpaceRepr {
            fields: s.fields,
            nodes,
        }
    }
}

impl From<SpaceRepr> for AttributeSpace {
    fn from(r: SpaceRepr) -> Self {
        let mut nodes = r.nodes;
        nodes.sort_by_key(|n| n.id);
        let mut space = AttributeSpace::new(r.fields);
        for n in nodes {
            let token = AttributeToken {
                field_id: n.field,
                value_token: n.token,
            };
            let id = NodeId::from(space.tokens.len());
            space.index.insert(token.clone(), id);
            space.tokens.push(token);
            space.counts.push(n.count);
        }
        space
    }
}
