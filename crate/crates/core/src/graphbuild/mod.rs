//! Meta-rule driven construction of behavior subgraphs and the accumulated
//! attribute-space graph, plus exports for visualization.

mod build;
mod export;
mod metarule;

pub use build::{accumulate, build_all, build_subgraph};
pub use export::{export_dot, export_vis, graph_to_dot, vis_to_dot, write_text, VisEdge, VisNode, VisPayload};
pub use metarule::{CompiledRule, EdgeSpec, MetaRule, BUILTIN_RULES, CLIQUE_EDGE};

use crate::error::Result;
use crate::ingest::DatasetSchema;

/// Compiles `rule` against the attribute fields of `schema`.
pub fn compile_for(rule: &MetaRule, schema: &DatasetSchema) -> Result<CompiledRule> {
    let fields: Vec<String> = schema.field_names().into_iter().map(String::from).collect();
    rule.compile(&fields)
}
