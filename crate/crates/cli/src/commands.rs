use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use bms_core::detect::{classification_metrics, cramers_v, subgroup_report};
use bms_core::expressiveness::{crossover, curve, curve_csv, ALL_MODES};
use bms_core::generate::{
    harness_csv, strategy_harness, FraudData, GraphVae, HarnessConfig, SlotSchema, Strategy, VaeConfig, VaeGraph,
};
use bms_core::gnn::{train_detect, DetectConfig, EmbeddingTable, NodeClassConfig};
use bms_core::graphbuild::{
    accumulate, build_all, compile_for, export_vis, graph_to_dot, vis_to_dot, CompiledRule, MetaRule, BUILTIN_RULES,
};
use bms_core::graphmetrics::{compare_sets, LabeledGraph};
use bms_core::ingest::{read_csv, synth_dataset, write_csv_file, DatasetSchema, PlantedRule, ReadOutcome};
use bms_core::numerics::checkpoint;
use bms_core::predict::{entropy_curve, evaluate, leave_last_out, nodeclass_embeddings, ClickStats, InteractionLog, Scorer, ScorerKind};
use bms_core::{AttributeSpace, BehaviorRecord, BehaviorSubgraph, Error, HeteroGraph, Result};

use crate::args::*;
use crate::manifest::{self, io_err, RunManifest};

/// What a subcommand read, wrote and reports.
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Directory or file the manifest sits beside.
    pub primary: PathBuf,
    pub config: Value,
    pub seed: Option<u64>,
    pub summary: Value,
    pub message: String,
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let rule = cli.meta_rule.as_deref();
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::BuildGraph(a) => build_graph(a, rule),
        Command::ExportDot(a) => export_dot(a),
        Command::DetectTrain(a) | Command::Detect(DetectCmd::Train(a)) => detect_train(a, rule),
        Command::DetectEval(a) | Command::Detect(DetectCmd::Eval(a)) => detect_eval(a),
        Command::PredictEval(a) | Command::Predict(PredictCmd::Eval(a)) => predict_eval(a, rule),
        Command::Entropy(a) => entropy(a),
        Command::GenerateTrain(a) | Command::Generate(GenerateCmd::Train(a)) => generate_train(a, rule),
        Command::GenerateSample(a) | Command::Generate(GenerateCmd::Sample(a)) => generate_sample(a),
        Command::GenerateHarness(a) | Command::Generate(GenerateCmd::Harness(a)) => {
            generate_harness(a, rule, cli.threads)
        }
        Command::MetricsCompare(a) | Command::Metrics(MetricsCmd::Compare(a)) => metrics_compare(a),
        Command::ExpressCurve(a) | Command::Express(ExpressCmd::Curve(a)) => express_curve(a),
    }
}

pub fn write_manifest(o: &Outcome, name: &str, argv: &[String], start: Instant) -> Result<()> {
    let mut inputs = BTreeMap::new();
    for p in &o.inputs {
        manifest::digests(p, &mut inputs)?;
    }
    let mut outputs = BTreeMap::new();
    for p in &o.outputs {
        manifest::digests(p, &mut outputs)?;
    }
    let m = RunManifest {
        command: argv.to_vec(),
        subcommand: name.to_string(),
        config_hash: manifest::sha256_hex(serde_json::to_string(&o.config)?.as_bytes()),
        seed: o.seed,
        versions: manifest::versions(),
        inputs,
        outputs,
        wall_time_ms: start.elapsed().as_millis(),
    };
    write(&manifest::manifest_path(&o.primary), &serde_json::to_string_pretty(&m)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write(path, &serde_json::to_string_pretty(value)?)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Settings from an optional TOML file, defaults otherwise.
fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(toml::from_str(&read_text(p)?)?),
        None => Ok(T::default()),
    }
}

fn load_data(input: &Path, schema: &str) -> Result<(DatasetSchema, ReadOutcome)> {
    let schema = DatasetSchema::load(schema)?;
    let outcome = read_csv(input, &schema)?;
    for d in &outcome.diagnostics {
        log::warn!("row {}: {}", d.row, d.message);
    }
    if outcome.records.is_empty() {
        return Err(Error::EmptyInput(format!("no usable rows in {}", input.display())));
    }
    Ok((schema, outcome))
}

/// `--meta-rule`, else the built-in rule named like the schema, else the
/// attribute clique.
fn resolve_rule(rule: Option<&str>, schema: &DatasetSchema) -> Result<(MetaRule, CompiledRule)> {
    let meta = match rule {
        Some(r) => MetaRule::load(r)?,
        None if BUILTIN_RULES.contains(&schema.name.as_str()) => MetaRule::builtin(&schema.name)?,
        None => MetaRule::clique(&schema.name),
    };
    let compiled = compile_for(&meta, schema)?;
    Ok((meta, compiled))
}

fn rule_inputs(rule: Option<&str>) -> Vec<PathBuf> {
    rule.filter(|r| !BUILTIN_RULES.contains(r)).map(PathBuf::from).into_iter().collect()
}

fn schema_inputs(schema: &str) -> Vec<PathBuf> {
    if bms_core::ingest::BUILTIN_SCHEMAS.contains(&schema) {
        Vec::new()
    } else {
        vec![PathBuf::from(schema)]
    }
}

fn synth(a: &SynthArgs) -> Result<Outcome> {
    let rule = match a.rule.as_deref() {
        None => PlantedRule::default_for(&a.schema),
        Some("month-area") => PlantedRule::MonthArea { classes: a.classes },
        Some("mod-sum") => PlantedRule::ModSum { classes: a.classes },
        Some("random") => PlantedRule::Random { classes: a.classes },
        Some("fraud") => PlantedRule::Fraud {
            fraud_rate: a.fraud_rate,
        },
        Some("converging") => PlantedRule::Converging {
            answers: a.answers,
            favorites: a.favorites,
        },
        Some(other) => return Err(Error::InvalidArgument(format!("unknown planted rule {other:?}"))),
    };
    let schema = DatasetSchema::builtin(&a.schema)?;
    let records = synth_dataset(&a.schema, a.seed, a.n, &rule)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", a.schema)));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    write_csv_file(&out, &schema, &records)?;
    Ok(Outcome {
        inputs: Vec::new(),
        outputs: vec![out.clone()],
        primary: out.clone(),
        config: json!({ "schema": a.schema, "n": a.n, "rule": rule }),
        seed: Some(a.seed),
        summary: json!({ "records": records.len(), "out": out }),
        message: format!("wrote {} records to {}", records.len(), out.display()),
    })
}

fn ingest(a: &IngestArgs) -> Result<Outcome> {
    let (schema, data) = load_data(&a.data.input, &a.data.schema)?;
    let (space, _) = bms_core::ingest::build_space(&schema, &data.records)?;
    mkdir(&a.out)?;
    write(&a.out.join("space.json"), &space.to_json()?)?;
    write_json(&a.out.join("diagnostics.json"), &data.diagnostics)?;
    let dropped = data.diagnostics.iter().filter(|d| !d.kept).count();
    let mut inputs = vec![a.data.input.clone()];
    inputs.extend(schema_inputs(&a.data.schema));
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "schema": schema }),
        seed: None,
        summary: json!({ "records": data.records.len(), "dropped": dropped, "nodes": space.len() }),
        message: format!("{} records, {} dropped, {} attribute nodes", data.records.len(), dropped, space.len()),
    })
}

fn build_graph(a: &BuildArgs, rule: Option<&str>) -> Result<Outcome> {
    let (schema, data) = load_data(&a.data.input, &a.data.schema)?;
    let (meta, compiled) = resolve_rule(rule, &schema)?;
    let (space, subgraphs) = build_all(&data.records, &schema, &compiled)?;
    let graph = accumulate(&subgraphs, &space)?;
    mkdir(&a.out)?;
    write(&a.out.join("space.json"), &space.to_json()?)?;
    write(&a.out.join("graph.json"), &graph.to_json()?)?;
    write_json(&a.out.join("subgraphs.json"), &subgraphs)?;
    write(&a.out.join("rule.toml"), &meta.to_toml()?)?;
    let mut inputs = vec![a.data.input.clone()];
    inputs.extend(schema_inputs(&a.data.schema));
    inputs.extend(rule_inputs(rule));
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "schema": schema, "rule": meta }),
        seed: None,
        summary: json!({
            "records": subgraphs.len(),
            "nodes": graph.node_count(),
            "edges": graph.edge_count(),
            "total_weight": graph.total_weight(),
        }),
        message: format!("{} behaviors, {} nodes, {} edges", subgraphs.len(), graph.node_count(), graph.edge_count()),
    })
}

fn export_dot(a: &ExportDotArgs) -> Result<Outcome> {
    let graph = HeteroGraph::from_json(&read_text(&a.graph)?)?;
    let space = match &a.space {
        Some(p) => Some(AttributeSpace::from_json(&read_text(p)?)?),
        None => None,
    };
    let mut inputs = vec![a.graph.clone()];
    inputs.extend(a.space.clone());
    let dot = match &a.focal {
        Some(id) => {
            let space = space
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--focal needs --space".into()))?;
            let path = a
                .subgraphs
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--focal needs --subgraphs".into()))?;
            inputs.push(path.clone());
            let sgs: Vec<BehaviorSubgraph> = read_json(path)?;
            let focal = sgs
                .iter()
                .find(|s| &s.record_id == id)
                .ok_or_else(|| Error::NotFound(format!("record {id}")))?;
            vis_to_dot(&export_vis(&graph, space, focal, a.depth)?)
        }
        None => graph_to_dot(&graph, space.as_ref()),
    };
    write(&a.out, &dot)?;
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "focal": a.focal, "depth": a.depth }),
        seed: None,
        summary: json!({ "out": a.out, "bytes": dot.len() }),
        message: format!("wrote {}", a.out.display()),
    })
}

fn sorted_labels(records: &[BehaviorRecord]) -> Result<(Vec<String>, Vec<usize>)> {
    let mut classes: Vec<String> = Vec::new();
    for r in records {
        classes.push(r.label.clone().ok_or(Error::NoLabels)?);
    }
    let raw = classes.clone();
    classes.sort();
    classes.dedup();
    let ys = raw
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    Ok((classes, ys))
}

fn detect_train(a: &DetectTrainArgs, rule: Option<&str>) -> Result<Outcome> {
    let mut cfg: DetectConfig = load_config(a.config.as_deref())?;
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.embed_dim {
        cfg.embed_dim = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let (schema, data) = load_data(&a.data.input, &a.data.schema)?;
    let (meta, compiled) = resolve_rule(rule, &schema)?;
    let (space, subgraphs) = build_all(&data.records, &schema, &compiled)?;
    let (classes, ys) = sorted_labels(&data.records)?;
    let table = match &a.embeddings {
        Some(p) => EmbeddingTable::import_file(&space, p)?,
        None => EmbeddingTable::hashed(&space, cfg.embed_dim, cfg.seed),
    };
    info!("training on {} behaviors, {} classes, {} nodes", subgraphs.len(), classes.len(), space.len());
    let out = train_detect(&space, &subgraphs, &ys, classes.len(), compiled.relation_count(), &table, &cfg)?;
    if out.report.loss_curve.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric("non-finite training loss".into()));
    }

    mkdir(&a.out)?;
    checkpoint::save(
        &a.out.join("detector"),
        &out.detector.params,
        json!({ "config": cfg, "classes": classes, "relations": compiled.relation_count() }),
    )?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("csv write: {e}"));
    w.write_record(["record_id", "label", "pred"]).map_err(csv_err)?;
    for (&i, &p) in out.split.test.iter().zip(&out.test_predictions) {
        w.write_record([data.records[i].record_id.as_str(), &classes[ys[i]], &classes[p]])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("csv flush: {e}")))?;
    write(&a.out.join("predictions.csv"), &String::from_utf8_lossy(&bytes))?;
    let report = json!({
        "test_accuracy": out.test_accuracy,
        "best_epoch": out.report.best_epoch,
        "loss_curve": out.report.loss_curve,
        "valid_accuracy": out.report.valid_accuracy,
        "classes": classes,
        "train": out.split.train.len(),
        "valid": out.split.valid.len(),
        "test": out.split.test.len(),
    });
    write_json(&a.out.join("train.json"), &report)?;

    let mut inputs = vec![a.data.input.clone()];
    inputs.extend(schema_inputs(&a.data.schema));
    inputs.extend(rule_inputs(rule));
    inputs.extend(a.config.clone());
    inputs.extend(a.embeddings.clone());
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "detect": cfg, "rule": meta }),
        seed: Some(cfg.seed),
        summary: json!({
            "test_accuracy": out.test_accuracy,
            "best_epoch": out.report.best_epoch,
            "final_loss": out.report.loss_curve.last(),
            "out": a.out,
        }),
        message: format!("test accuracy {:.4} (best epoch {})", out.test_accuracy, out.report.best_epoch),
    })
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for r in rdr.records() {
        let r = r.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        rows.push(r.iter().map(String::from).collect());
    }
    Ok((headers, rows))
}

fn detect_eval(a: &DetectEvalArgs) -> Result<Outcome> {
    let (headers, rows) = read_table(&a.pred)?;
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, pred_col) = match (col("record_id"), col("pred")) {
        (Some(i), Some(p)) => (i, p),
        _ => return Err(Error::SchemaMismatch("predictions need record_id and pred columns".into())),
    };
    let mut inputs = vec![a.pred.clone()];
    let mut y_true = Vec::with_capacity(rows.len());
    let mut y_pred = Vec::with_capacity(rows.len());
    let mut groups = Vec::new();
    match &a.truth {
        Some(path) => {
            inputs.push(path.clone());
            let (_, data) = load_data(path, &a.schema)?;
            let by_id: BTreeMap<&str, &BehaviorRecord> =
                data.records.iter().map(|r| (r.record_id.as_str(), r)).collect();
            for row in &rows {
                let r = by_id
                    .get(row[id_col].as_str())
                    .ok_or_else(|| Error::NotFound(format!("record {} in truth file", row[id_col])))?;
                y_true.push(r.label.clone().ok_or(Error::NoLabels)?);
                y_pred.push(row[pred_col].clone());
                if let Some(g) = &a.group {
                    groups.push(r.get(g).unwrap_or("").to_string());
                }
            }
        }
        None => {
            let label_col = col("label").ok_or(Error::NoLabels)?;
            let group_col = match &a.group {
                Some(g) => Some(col(g).ok_or_else(|| Error::NotFound(format!("column {g}")))?),
                None => None,
            };
            for row in &rows {
                y_true.push(row[label_col].clone());
                y_pred.push(row[pred_col].clone());
                if let Some(gc) = group_col {
                    groups.push(row[gc].clone());
                }
            }
        }
    }
    let report = classification_metrics(&y_true, &y_pred)?;
    let mut summary = json!({ "accuracy": report.accuracy, "macro_f1": report.macro_f1, "total": report.total });
    let mut full = json!({ "metrics": report });
    if a.group.is_some() {
        let assoc = cramers_v(&y_pred, &groups)?;
        let mut targets: Vec<&str> = y_true.iter().map(String::as_str).collect();
        targets.sort_unstable();
        targets.dedup();
        let tallies = subgroup_report(&y_true, &y_pred, &groups, &targets, None)?;
        summary["cramers_v"] = json!(assoc.value);
        full["cramers_v"] = json!(assoc);
        full["subgroups"] = json!(tallies);
    }
    write_json(&a.out, &full)?;
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "group": a.group, "schema": a.schema }),
        seed: None,
        message: format!("accuracy {:.4} over {} records", report.accuracy, report.total),
        summary,
    })
}

fn click_log(input: &Path, schema: &str) -> Result<(DatasetSchema, Vec<BehaviorRecord>, InteractionLog)> {
    let (schema, data) = load_data(input, schema)?;
    let log = InteractionLog::from_zhihu(&data.records)?;
    Ok((schema, data.records, log))
}

fn predict_eval(a: &PredictEvalArgs, rule: Option<&str>) -> Result<Outcome> {
    let kind: ScorerKind = a.scorer.parse()?;
    let (schema, records, log) = click_log(&a.input, &a.schema)?;
    let set = leave_last_out(&log, a.negatives, a.seed)?;
    let stats = ClickStats::new(&set.train);
    let result = match kind {
        ScorerKind::Pop => evaluate(&set, &Scorer::Pop(&stats), a.k)?,
        ScorerKind::ItemKnn => evaluate(&set, &Scorer::ItemKnn(&stats), a.k)?,
        ScorerKind::Embed => {
            let (_, compiled) = resolve_rule(rule, &schema)?;
            let cfg = NodeClassConfig {
                epochs: a.epochs,
                seed: a.seed,
                ..NodeClassConfig::default()
            };
            let index = nodeclass_embeddings(&records, &schema, &compiled, &set, "user", "answer", &cfg)?;
            evaluate(&set, &Scorer::Embed(&index, &stats), a.k)?
        }
    };
    write_json(&a.out, &result)?;
    let mut inputs = vec![a.input.clone()];
    inputs.extend(schema_inputs(&a.schema));
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "scorer": kind, "k": a.k, "negatives": a.negatives, "epochs": a.epochs }),
        seed: Some(a.seed),
        message: format!("{} users, hit@{} {:.4}", set.users.len(), a.k, result.metrics.hit),
        summary: serde_json::to_value(&result)?,
    })
}

fn entropy(a: &EntropyArgs) -> Result<Outcome> {
    let (_, _, log) = click_log(&a.input, "zhihu")?;
    let histories = log.click_histories();
    let users: Vec<String> = histories.keys().cloned().collect();
    let curve = entropy_curve(&histories, &users, &a.checkpoints)?;
    write(&a.out, &curve.to_csv())?;
    Ok(Outcome {
        inputs: vec![a.input.clone()],
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "checkpoints": a.checkpoints }),
        seed: None,
        message: format!("{} checkpoints over {} users", curve.points.len(), users.len()),
        summary: serde_json::to_value(&curve)?,
    })
}

fn graph_file(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("graph-{i:05}.json"))
}

fn write_graphs(dir: &Path, graphs: &[BehaviorSubgraph], space: &AttributeSpace) -> Result<()> {
    mkdir(dir)?;
    for (i, g) in graphs.iter().enumerate() {
        write_json(&graph_file(dir, i), g)?;
    }
    write(&dir.join("space.json"), &space.to_json()?)
}

/// Every `graph-*.json` in `dir`, in name order.
fn read_graphs(dir: &Path) -> Result<Vec<BehaviorSubgraph>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy())
                .is_some_and(|n| n.starts_with("graph-") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    files.iter().map(|f| read_json(f)).collect()
}

fn generate_train(a: &GenTrainArgs, rule: Option<&str>) -> Result<Outcome> {
    let mut cfg: VaeConfig = load_config(a.config.as_deref())?;
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let (schema, data) = load_data(&a.data.input, &a.data.schema)?;
    let (meta, compiled) = resolve_rule(rule, &schema)?;
    let (space, subgraphs) = build_all(&data.records, &schema, &compiled)?;
    let slots = SlotSchema::new(&compiled, &space);
    let frauds: Vec<&BehaviorSubgraph> = data
        .records
        .iter()
        .zip(&subgraphs)
        .filter(|(r, _)| r.label.as_deref() == Some("1"))
        .map(|(_, s)| s)
        .take(a.max_graphs)
        .collect();
    if frauds.is_empty() {
        return Err(Error::EmptyInput("no fraud records labeled 1".into()));
    }
    let graphs: Vec<VaeGraph> = frauds.iter().map(|s| slots.encode(s)).collect::<Result<_>>()?;
    let mut vae = GraphVae::new(slots.clone(), cfg.clone())?;
    let report = vae.fit(&graphs)?;
    if !report.last.total.is_finite() {
        return Err(Error::Numeric("non-finite elbo".into()));
    }

    mkdir(&a.out)?;
    checkpoint::save(&a.out.join("vae"), &vae.params, json!({ "config": cfg, "slots": slots }))?;
    write_json(&a.out.join("report.json"), &report)?;
    let train: Vec<BehaviorSubgraph> = frauds.into_iter().cloned().collect();
    write_graphs(&a.out.join("train"), &train, &space)?;

    let mut inputs = vec![a.data.input.clone()];
    inputs.extend(schema_inputs(&a.data.schema));
    inputs.extend(rule_inputs(rule));
    inputs.extend(a.config.clone());
    let first = report.elbo_curve.first().copied().unwrap_or(f64::NAN);
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "vae": cfg, "rule": meta, "max_graphs": a.max_graphs }),
        seed: Some(cfg.seed),
        summary: json!({
            "graphs": graphs.len(),
            "elbo_first": first,
            "elbo_last": report.last.total,
            "fallbacks": report.fallbacks,
            "out": a.out,
        }),
        message: format!("{} graphs, elbo {:.4} -> {:.4}", graphs.len(), first, report.last.total),
    })
}

fn load_vae(model: &Path) -> Result<(GraphVae, AttributeSpace)> {
    let (params, meta) = checkpoint::load(&model.join("vae"))?;
    let config: VaeConfig = serde_json::from_value(meta["config"].clone())?;
    let slots: SlotSchema = serde_json::from_value(meta["slots"].clone())?;
    let mut vae = GraphVae::new(slots, config)?;
    vae.params = params;
    let space = AttributeSpace::from_json(&read_text(&model.join("train").join("space.json"))?)?;
    Ok((vae, space))
}

fn generate_sample(a: &GenSampleArgs) -> Result<Outcome> {
    let (vae, space) = load_vae(&a.model)?;
    let report = vae.sample(a.n, a.seed, a.threshold, a.retry_cap)?;
    let graphs: Vec<BehaviorSubgraph> = report
        .graphs
        .iter()
        .enumerate()
        .map(|(i, g)| vae.schema.to_subgraph(g, &format!("gen-{i}")))
        .collect();
    write_graphs(&a.out, &graphs, &space)?;
    let summary = json!({
        "graphs": graphs.len(),
        "attempts": report.attempts,
        "rejected": report.rejected,
        "rejection_rate": report.rejection_rate,
        "exhausted": report.exhausted,
    });
    write_json(&a.out.join("sample.json"), &summary)?;
    Ok(Outcome {
        inputs: vec![a.model.join("vae.bin"), a.model.join("vae.json")],
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "n": a.n, "threshold": a.threshold, "retry_cap": a.retry_cap }),
        seed: Some(a.seed),
        message: format!("{} graphs, rejection rate {:.3}", graphs.len(), report.rejection_rate),
        summary,
    })
}

fn generate_harness(a: &HarnessArgs, rule: Option<&str>, threads: usize) -> Result<Outcome> {
    let mut cfg: HarnessConfig = load_config(a.config.as_deref())?;
    if let Some(h) = &a.hide {
        cfg.hide = h.clone();
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let strategies = match a.mode.as_deref() {
        None => vec![Strategy::S1, Strategy::S2],
        Some(m) => vec![m.parse::<Strategy>()?],
    };
    let (schema, data) = load_data(&a.data.input, &a.data.schema)?;
    let (meta, compiled) = resolve_rule(rule, &schema)?;
    let fraud = FraudData::from_records(&data.records, &schema, &compiled, &a.data.amount_column)?;
    let mut rows = Vec::new();
    for s in &strategies {
        rows.extend(strategy_harness(&fraud, *s, &cfg, threads)?);
    }
    write(&a.out, &harness_csv(&rows))?;
    let mut inputs = vec![a.data.input.clone()];
    inputs.extend(schema_inputs(&a.data.schema));
    inputs.extend(rule_inputs(rule));
    inputs.extend(a.config.clone());
    Ok(Outcome {
        inputs,
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "harness": cfg, "rule": meta, "strategies": strategies }),
        seed: Some(cfg.seed),
        message: format!("{} rows written to {}", rows.len(), a.out.display()),
        summary: serde_json::to_value(&rows)?,
    })
}

fn metrics_compare(a: &CompareArgs) -> Result<Outcome> {
    let space_path = a.space.clone().unwrap_or_else(|| a.train.join("space.json"));
    let space = AttributeSpace::from_json(&read_text(&space_path)?)?;
    let labeled = |dir: &Path| -> Result<Vec<LabeledGraph>> {
        read_graphs(dir)?
            .iter()
            .map(|g| LabeledGraph::from_subgraph(g, &space))
            .collect()
    };
    let generated = labeled(&a.generated)?;
    let reference = labeled(&a.train)?;
    let report = compare_sets(&generated, &reference, a.kernel_size)?;
    write_json(&a.out, &report)?;
    Ok(Outcome {
        inputs: vec![a.generated.clone(), a.train.clone(), space_path],
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "kernel_size": a.kernel_size }),
        seed: None,
        message: format!(
            "KSI {:.4}, orbit {:.4}, novel {:.3}, unique {:.3}",
            report.mean_ksi, report.mean_orbit_similarity, report.novelty.novel, report.novelty.unique
        ),
        summary: serde_json::to_value(&report)?,
    })
}

fn express_curve(a: &ExpressArgs) -> Result<Outcome> {
    let rows = curve(1, a.n_max, &ALL_MODES, a.k_rep, a.k_struct)?;
    write(&a.out, &curve_csv(&rows))?;
    let cross = crossover(a.k_rep, a.k_struct);
    Ok(Outcome {
        inputs: Vec::new(),
        outputs: vec![a.out.clone()],
        primary: a.out.clone(),
        config: json!({ "n_max": a.n_max, "k_rep": a.k_rep, "k_struct": a.k_struct }),
        seed: None,
        summary: json!({ "rows": rows.len(), "crossover": cross, "out": a.out }),
        message: match cross {
            Some(n) => format!("{} rows; structure overtakes representation at n = {n}", rows.len()),
            None => format!("{} rows; no crossover", rows.len()),
        },
    })
}
