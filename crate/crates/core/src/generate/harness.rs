use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::slots::SlotSchema;
use super::vae::{GraphVae, VaeConfig};
use crate::error::{Error, Result};
use crate::gnn::{DetectConfig, Detector, EmbeddingTable, RelGraph};
use crate::graph::BehaviorSubgraph;
use crate::graphbuild::{accumulate, build_all, CompiledRule};
use crate::ingest::DatasetSchema;
use crate::record::BehaviorRecord;
use crate::seed;
use crate::space::AttributeSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Generated structures replace hidden frauds in the training set.
    S1,
    /// Generated structures are mixed into the test set.
    S2,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(Strategy::S1),
            "S2" => Ok(Strategy::S2),
            _ => Err(Error::InvalidArgument(format!("unknown strategy {s:?}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::S1 => "S1",
            Strategy::S2 => "S2",
        })
    }
}

/// Labeled behaviors prepared once for every repetition.
#[derive(Clone, Debug)]
pub struct FraudData {
    pub space: AttributeSpace,
    pub subgraphs: Vec<BehaviorSubgraph>,
    pub is_fraud: Vec<bool>,
    pub amounts: Vec<f64>,
    pub slots: SlotSchema,
    pub relations: usize,
}

impl FraudData {
    /// Records labeled `"1"` are frauds; `amount_column` holds the money
    /// involved (unparsable amounts count as 0).
    pub fn from_records(
        records: &[BehaviorRecord],
        schema: &DatasetSchema,
        rule: &CompiledRule,
        amount_column: &str,
    ) -> Result<Self> {
        if records.iter().any(|r| r.label.is_none()) {
            return Err(Error::NoLabels);
        }
        let (space, subgraphs) = build_all(records, schema, rule)?;
        let is_fraud: Vec<bool> = records.iter().map(|r| r.label.as_deref() == Some("1")).collect();
        if is_fraud.iter().all(|&f| f) || !is_fraud.iter().any(|&f| f) {
            return Err(Error::DegenerateLabels);
        }
        let amounts = records
            .iter()
            .map(|r| r.get(amount_column).and_then(|v| v.trim().parse().ok()).unwrap_or(0.0))
            .collect();
        Ok(Self {
            slots: SlotSchema::new(rule, &space),
            relations: rule.relation_count(),
            space,
            subgraphs,
            is_fraud,
            amounts,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    /// Fractions of training frauds hidden from the generator and detector.
    pub hide: Vec<f64>,
    pub reps: usize,
    /// Normal behaviors drawn per fraud.
    pub negative_ratio: usize,
    pub test_frac: f64,
    /// S1 keeps the hidden frauds in the detector's training set and adds
    /// the generated ones on top instead of replacing them.
    pub augment: bool,
    pub threshold: f64,
    pub retry_cap: usize,
    pub vae: VaeConfig,
    pub detect: DetectConfig,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            hide: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            reps: 10,
            negative_ratio: 10,
            test_frac: 0.3,
            augment: false,
            threshold: 0.5,
            retry_cap: 20,
            vae: VaeConfig {
                epochs: 60,
                ..VaeConfig::default()
            },
            detect: DetectConfig {
                embed_dim: 32,
                hidden: 32,
                head: vec![32],
                epochs: 60,
                lr: 0.01,
                ..DetectConfig::default()
            },
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub auc: f64,
    pub prevented_loss: f64,
    pub test_fraud_amount: f64,
    pub generated: usize,
    pub rejection_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessRow {
    pub strategy: Strategy,
    pub h: f64,
    pub auc_mean: f64,
    pub auc_stdev: f64,
    pub prevented_loss: f64,
    pub test_fraud_amount: f64,
    pub reps: usize,
}

/// Area under the ROC curve from ranks; tied scores share their mean rank.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::InvalidArgument("score and label counts differ".into()));
    }
    let pos = positive.iter().filter(|&&p| p).count();
    let neg = positive.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::EmptyEval);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mean_rank * idx[i..=j].iter().filter(|&&t| positive[t]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Money in frauds the detector flagged.
pub fn prevented_loss(flagged: &[bool], is_fraud: &[bool], amounts: &[f64]) -> f64 {
    flagged
        .iter()
        .zip(is_fraud)
        .zip(amounts)
        .filter(|((&f, &y), _)| f && y)
        .map(|(_, a)| a)
        .sum()
}

fn split_count(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// One repetition at hide fraction `h`. Repetition `rep` uses the same data
/// split at every `h`.
pub fn run_repetition(data: &FraudData, strategy: Strategy, h: f64, cfg: &HarnessConfig, rep: usize) -> Result<RepOutcome> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::InvalidArgument(format!("hide fraction {h} outside [0, 1]")));
    }
    let rep_seed = seed::stage_seed(cfg.seed, &format!("rep:{rep}"));
    let mut rng = seed::rng(rep_seed);
    let mut frauds: Vec<usize> = (0..data.is_fraud.len()).filter(|&i| data.is_fraud[i]).collect();
    let mut normals: Vec<usize> = (0..data.is_fraud.len()).filter(|&i| !data.is_fraud[i]).collect();
    frauds.shuffle(&mut rng);
    normals.shuffle(&mut rng);
    normals.truncate((frauds.len() * cfg.negative_ratio.max(1)).min(normals.len()));
    if frauds.len() < 2 || normals.len() < 2 {
        return Err(Error::InfeasibleConfig("need at least two frauds and two normal behaviors".into()));
    }
    let (test_f, train_f) = frauds.split_at(split_count(frauds.len(), cfg.test_frac));
    let (test_n, train_n) = normals.split_at(split_count(normals.len(), cfg.test_frac));
    let hidden_count = (h * train_f.len() as f64).round() as usize;
    if hidden_count >= train_f.len() {
        return Err(Error::InfeasibleConfig(format!(
            "hide fraction {h} leaves no real fraud to train the generator"
        )));
    }
    let (hidden, visible) = train_f.split_at(hidden_count);

    let mut generated = Vec::new();
    let mut rejection_rate = 0.0;
    if hidden_count > 0 {
        let graphs = visible
            .iter()
            .map(|&i| data.slots.encode(&data.subgraphs[i]))
            .collect::<Result<Vec<_>>>()?;
        let mut vae = GraphVae::new(
            data.slots.clone(),
            VaeConfig {
                seed: seed::stage_seed(rep_seed, "vae"),
                ..cfg.vae.clone()
            },
        )?;
        vae.fit(&graphs)?;
        let s = vae.sample(hidden_count, seed::stage_seed(rep_seed, "sample"), cfg.threshold, cfg.retry_cap)?;
        rejection_rate = s.rejection_rate;
        generated = s
            .graphs
            .iter()
            .enumerate()
            .map(|(i, g)| data.slots.to_subgraph(g, &format!("gen-{i}")))
            .collect();
    }

    let mut train: Vec<BehaviorSubgraph> = Vec::new();
    let mut train_y = Vec::new();
    let mut push = |sg: &BehaviorSubgraph, y: usize| {
        train.push(sg.clone());
        train_y.push(y);
    };
    for &i in train_n {
        push(&data.subgraphs[i], 0);
    }
    for &i in visible {
        push(&data.subgraphs[i], 1);
    }
    if strategy == Strategy::S1 {
        if cfg.augment {
            for &i in hidden {
                push(&data.subgraphs[i], 1);
            }
        }
        for g in &generated {
            push(g, 1);
        }
    }

    let mut test: Vec<BehaviorSubgraph> = Vec::new();
    let mut test_y = Vec::new();
    let mut test_amount = Vec::new();
    for &i in test_f.iter().chain(test_n) {
        test.push(data.subgraphs[i].clone());
        test_y.push(data.is_fraud[i]);
        test_amount.push(data.amounts[i]);
    }
    if strategy == Strategy::S2 {
        for g in &generated {
            test.push(g.clone());
            test_y.push(true);
            // synthetic frauds carry no money
            test_amount.push(0.0);
        }
    }

    let detect = DetectConfig {
        seed: seed::stage_seed(rep_seed, "detect"),
        ..cfg.detect.clone()
    };
    let table = EmbeddingTable::hashed(&data.space, detect.embed_dim, detect.seed);
    let graph = accumulate(&train, &data.space)?;
    let rel = RelGraph::new(&graph, data.space.len(), data.relations, detect.aggregation)?;
    let mut det = Detector::new(&table, rel, data.relations, 2, &detect)?;
    det.fit((&train, &train_y), (&[], &[]))?;
    let proba = det.predict_proba(&test)?;
    let scores: Vec<f64> = (0..proba.rows()).map(|i| proba.get(i, 1)).collect();
    let flagged: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
    let fraud_amount: f64 = test_y.iter().zip(&test_amount).filter(|(y, _)| **y).map(|(_, a)| a).sum();
    Ok(RepOutcome {
        auc: auc(&scores, &test_y)?,
        prevented_loss: prevented_loss(&flagged, &test_y, &test_amount),
        test_fraud_amount: fraud_amount,
        generated: generated.len(),
        rejection_rate,
    })
}

/// Runs `cfg.reps` repetitions at every hide fraction on a pool of
/// `threads` workers. Rows come back in ascending `h`.
pub fn strategy_harness(data: &FraudData, strategy: Strategy, cfg: &HarnessConfig, threads: usize) -> Result<Vec<HarnessRow>> {
    if cfg.reps == 0 || cfg.hide.is_empty() {
        return Err(Error::InvalidArgument("harness needs at least one repetition and one hide fraction".into()));
    }
    let mut hs = cfg.hide.clone();
    if hs.iter().any(|h| !(0.0..=1.0).contains(h)) {
        return Err(Error::InvalidArgument(format!("hide fractions {hs:?} outside [0, 1]")));
    }
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.last() == Some(&1.0) {
        return Err(Error::InfeasibleConfig("h = 1 hides every real fraud".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..hs.len()).flat_map(|i| (0..cfg.reps).map(move |r| (i, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let outcomes: Vec<RepOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, r)| run_repetition(data, strategy, hs[i], cfg, r))
            .collect::<Result<_>>()
    })?;
    Ok(hs
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let reps = &outcomes[i * cfg.reps..(i + 1) * cfg.reps];
            let n = reps.len() as f64;
            let mean = reps.iter().map(|o| o.auc).sum::<f64>() / n;
            let var = if reps.len() > 1 {
                reps.iter().map(|o| (o.auc - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            HarnessRow {
                strategy,
                h,
                auc_mean: mean,
                auc_stdev: var.sqrt(),
                prevented_loss: reps.iter().map(|o| o.prevented_loss).sum::<f64>() / n,
                test_fraud_amount: reps.iter().map(|o| o.test_fraud_amount).sum::<f64>() / n,
                reps: reps.len(),
            }
        })
        .collect())
}

pub fn harness_csv(rows: &[HarnessRow]) -> String {
    let mut out = String::from("strategy,h,auc_mean,auc_stdev,prevented_loss,test_fraud_amount,reps\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.2},{:.2},{}\n",
            r.strategy, r.h, r.auc_mean, r.auc_stdev, r.prevented_loss, r.test_fraud_amount, r.reps
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Fraction of (positive, negative) pairs ordered correctly, ties half.
    fn pairwise_auc(s: &[f64], y: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] && !y[j] {
                    den += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_matches_pairwise_count() {
        let mut rng = crate::seed::rng(2);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
            y[0] = true;
            y[1] = false;
            let s: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect();
            assert!((auc(&s, &y).unwrap() - pairwise_auc(&s, &y)).abs() < 1e-12);
        }
        assert_eq!(auc(&[0.1, 0.9], &[false, true]).unwrap(), 1.0);
        assert!(auc(&[0.1], &[true]).is_err());
    }

    #[test]
    fn random_scores_near_half() {
        let mut rng = crate::seed::rng(8);
        let y: Vec<bool> = (0..4000).map(|i| i % 11 == 0).collect();
        let s: Vec<f64> = (0..4000).map(|_| rng.random()).collect();
        assert!((auc(&s, &y).unwrap() - 0.5).abs() < 0.05);
    }

    #[test]
    fn perfect_detector_prevents_everything() {
        let y = [true, false, true, false];
        let amounts = [10.5, 3.0, 7.25, 1.0];
        assert_eq!(prevented_loss(&y, &y, &amounts), 17.75);
    }

    #[test]
    fn strategy_names() {
        assert_eq!("s2".parse::<Strategy>().unwrap(), Strategy::S2);
        assert!("S3".parse::<Strategy>().is_err());
    }
}
