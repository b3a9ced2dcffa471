//! Behavioral molecular structures.
//!
//! Tabular behavior records are concretized as graphs over an attribute
//! space: every (field, value) token is a node, and a declarative meta-rule
//! decides which attribute pairs of one behavior are connected. On top of
//! that representation the crate provides relational graph convolution for
//! detection and node classification, ranking and entropy tools for
//! prediction, a graph variational autoencoder for generation, structural
//! similarity metrics, and an expressive-power calculator.

pub mod detect;
pub mod error;
pub mod graph;
pub mod expressiveness;
pub mod generate;
pub mod gnn;
pub mod graphbuild;
pub mod graphmetrics;
pub mod ingest;
pub mod numerics;
pub mod predict;
pub mod record;
pub mod seed;
pub mod space;

pub use error::{Error, Result};
pub use graph::{BehaviorSubgraph, EdgeKey, EdgeType, HeteroGraph, SubEdge};
pub use record::BehaviorRecord;
pub use space::{normalize_token, AttributeSpace, AttributeToken, NodeId};
