//! CSV ingestion, field transforms, dataset schemas and synthetic data.

mod csvio;
mod labels;
mod schema;
mod synth;
mod transform;

pub use csvio::{read_csv, read_csv_from, write_csv, write_csv_file, Diagnostic, ReadOutcome};
pub use labels::{label_ranking, stratified_split, top_k_labels, Split};
pub use schema::{DatasetSchema, FieldSpec, MissingPolicy, Tokenized, BUILTIN_SCHEMAS, MISSING_TOKEN};
pub use synth::{class_token, synth_dataset, PlantedRule, CRIME_CODES, ZHIHU_BASE_TS};
pub use transform::{
    count_class, date_difference, date_difference_bin, decimal_bucket, extract_hm, parse_date, ClockPart,
    DatePart, FieldTransform,
};

use rayon::prelude::*;

use crate::error::Result;
use crate::record::BehaviorRecord;
use crate::space::{AttributeSpace, NodeId};

/// Tokenizes every record and interns the tokens in row order.
/// Returns the space and each record's node ids (field order).
pub fn build_space(schema: &DatasetSchema, records: &[BehaviorRecord]) -> Result<(AttributeSpace, Vec<Vec<NodeId>>)> {
    build_space_sharded(schema, records, 1)
}

/// Same result as [`build_space`] for any shard count: shards tokenize
/// independently, interning then runs single-writer in row order.
pub fn build_space_sharded(
    schema: &DatasetSchema,
    records: &[BehaviorRecord],
    shards: usize,
) -> Result<(AttributeSpace, Vec<Vec<NodeId>>)> {
    let chunk = records.len().div_ceil(shards.max(1)).max(1);
    let tokenized: Vec<Vec<Tokenized>> = records
        .par_chunks(chunk)
        .map(|c| c.iter().map(|r| schema.tokenize(r)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut space = schema.empty_space();
    let mut ids = Vec::with_capacity(records.len());
    for t in tokenized.iter().flatten() {
        ids.push(space.ingest_behavior(t.tokens.iter().map(|(f, v)| (*f, v.as_str())))?);
    }
    Ok((space, ids))
}
