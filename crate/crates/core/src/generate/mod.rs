//! Graph variational autoencoder for behavior structures and the
//! generation strategies used to stress fraud detection.

mod harness;
mod matching;
mod slots;
mod vae;

pub use harness::{
    auc, harness_csv, prevented_loss, run_repetition, strategy_harness, FraudData, HarnessConfig, HarnessRow, RepOutcome,
    Strategy,
};
pub use matching::{identity_match, match_nodes, max_assignment, Assignment, MatchMode, MatchOutcome};
pub use slots::{SlotSchema, VaeGraph};
pub use vae::{
    recon_loss, GraphVae, LatentCode, LossParts, ProbGraph, ReconTerms, SampleReport, Target, VaeConfig, VaeReport,
};
