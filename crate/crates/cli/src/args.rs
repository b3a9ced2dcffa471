use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bms", version, about = "Behavior graphs: build, detect, predict, generate, compare")]
pub struct Cli {
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads; 1 gives bit-identical reruns.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Meta-rule: built-in name (crime, crime-vis, fraud, zhihu) or TOML path.
    /// Defaults to the rule named like the schema.
    #[arg(long, global = true)]
    pub meta_rule: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset with a planted rule.
    Synth(SynthArgs),
    /// Read a CSV and build the attribute space.
    Ingest(IngestArgs),
    /// Build behavior subgraphs and the accumulated graph.
    BuildGraph(BuildArgs),
    /// Render a graph (or a neighborhood around one behavior) as DOT.
    ExportDot(ExportDotArgs),
    DetectTrain(DetectTrainArgs),
    DetectEval(DetectEvalArgs),
    PredictEval(PredictEvalArgs),
    /// Mean per-user click entropy at increasing history lengths.
    Entropy(EntropyArgs),
    GenerateTrain(GenTrainArgs),
    GenerateSample(GenSampleArgs),
    GenerateHarness(HarnessArgs),
    MetricsCompare(CompareArgs),
    ExpressCurve(ExpressArgs),
    /// `detect train|eval`
    #[command(subcommand)]
    Detect(DetectCmd),
    /// `predict eval`
    #[command(subcommand)]
    Predict(PredictCmd),
    /// `generate train|sample|harness`
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// `metrics compare`
    #[command(subcommand)]
    Metrics(MetricsCmd),
    /// `express curve`
    #[command(subcommand)]
    Express(ExpressCmd),
}

#[derive(Debug, Subcommand)]
pub enum DetectCmd {
    Train(DetectTrainArgs),
    Eval(DetectEvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum PredictCmd {
    Eval(PredictEvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenerateCmd {
    Train(GenTrainArgs),
    Sample(GenSampleArgs),
    Harness(HarnessArgs),
}

#[derive(Debug, Subcommand)]
pub enum MetricsCmd {
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum ExpressCmd {
    Curve(ExpressArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// crime, crime-vis, fraud or zhihu.
    #[arg(long)]
    pub schema: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// month-area, mod-sum, random, fraud or converging; defaults per schema.
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.1)]
    pub fraud_rate: f64,
    #[arg(long, default_value_t = 300)]
    pub answers: usize,
    #[arg(long, default_value_t = 3)]
    pub favorites: usize,
    /// Output CSV; defaults to `<schema>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Built-in schema name or TOML path.
    #[arg(long, default_value = "crime")]
    pub schema: String,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportDotArgs {
    /// Graph JSON written by build-graph.
    #[arg(long)]
    pub graph: PathBuf,
    /// Attribute space JSON, for node labels.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// Subgraphs JSON; with --focal, exports the neighborhood of that record.
    #[arg(long)]
    pub subgraphs: Option<PathBuf>,
    #[arg(long)]
    pub focal: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectTrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// TOML file with detector settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial attribute vectors (JSON object label → vector).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectEvalArgs {
    /// Predictions CSV with `record_id,pred` (and optionally `label`).
    #[arg(long)]
    pub pred: PathBuf,
    /// Dataset CSV supplying true labels and group columns.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "crime")]
    pub schema: String,
    /// Raw column to test predictions against (Cramér's V, per-group accuracy).
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictEvalArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "zhihu")]
    pub schema: String,
    /// pop, itemknn or embed.
    #[arg(long, default_value = "pop")]
    pub scorer: String,
    #[arg(long, default_value_t = 10)]
    pub k: i64,
    #[arg(long, default_value_t = 100)]
    pub negatives: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Epochs of node-classification training for the embed scorer.
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated, strictly increasing history lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 20, 50, 100, 200])]
    pub checkpoints: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FraudArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "fraud")]
    pub schema: String,
    /// Raw column with transaction amounts.
    #[arg(long, default_value = "amount")]
    pub amount_column: String,
}

#[derive(Debug, Args)]
pub struct GenTrainArgs {
    #[command(flatten)]
    pub data: FraudArgs,
    /// TOML file with VAE settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Train on at most this many fraud graphs (first in file order).
    #[arg(long, default_value_t = 200)]
    pub max_graphs: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenSampleArgs {
    /// Model directory written by generate-train.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 20)]
    pub retry_cap: usize,
    /// Directory for the generated graphs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HarnessArgs {
    #[command(flatten)]
    pub data: FraudArgs,
    /// S1 or S2; both when omitted.
    #[arg(long)]
    pub mode: Option<String>,
    /// Comma-separated hide fractions in [0, 1).
    #[arg(long, value_delimiter = ',')]
    pub hide: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// TOML file with harness settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory of generated graph files (`graph-*.json`).
    #[arg(long)]
    pub generated: PathBuf,
    /// Directory of reference graph files.
    #[arg(long)]
    pub train: PathBuf,
    /// Attribute space JSON; defaults to `<train>/space.json`.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub kernel_size: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExpressArgs {
    #[arg(long, default_value_t = 50)]
    pub n_max: u64,
    #[arg(long, default_value_t = 100)]
    pub k_rep: u64,
    #[arg(long, default_value_t = 2)]
    pub k_struct: u64,
    #[arg(long)]
    pub out: PathBuf,
}
