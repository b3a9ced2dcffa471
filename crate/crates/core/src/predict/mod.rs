//! Next-interaction prediction: interaction logs, entropy, baseline and
//! embedding scorers, ranking metrics.

mod entropy;
mod eval;
mod log;
mod metrics;
mod scorer;

pub use entropy::{entropy, entropy_curve, entropy_of_counts, entropy_profile, CurvePoint, EntropyCurve};
pub use eval::{evaluate, leave_last_out, nodeclass_embeddings, EvalResult, EvalSet};
pub use log::{Interaction, InteractionLog};
pub use metrics::{ranking_metrics, RankingMetrics};
pub use scorer::{rank_items, top_k, ClickStats, EmbeddingIndex, Scored, Scorer, ScorerKind};
