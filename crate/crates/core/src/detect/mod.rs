//! Classification metrics, fairness associations and embedding drift.

mod drift;
mod fairness;
mod metrics;

pub use drift::{embedding_drift, DriftReport};
pub use fairness::{cramers_v, pearson, subgroup_csv, subgroup_report, Association, GroupTally, OTHER_GROUP};
pub use metrics::{classification_metrics, ClassReport, PerClass};
