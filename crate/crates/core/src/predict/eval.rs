use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::log::InteractionLog;
use super::metrics::{ranking_metrics, RankingMetrics};
use super::scorer::{rank_items, EmbeddingIndex, Scorer};
use crate::error::{Error, Result};
use crate::gnn::{train_nodeclass, NodeClassConfig};
use crate::graphbuild::{accumulate, build_all, CompiledRule};
use crate::ingest::DatasetSchema;
use crate::record::BehaviorRecord;
use crate::seed;
use crate::space::NodeId;

/// Leave-last-out protocol: each user's final click is held out and ranked
/// against sampled items the user never clicked.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSet {
    pub users: Vec<String>,
    pub train: BTreeMap<String, Vec<String>>,
    pub held_out: Vec<String>,
    pub candidates: Vec<Vec<String>>,
    /// Log sequence numbers of the held-out events.
    pub held_out_seq: BTreeSet<usize>,
}

pub fn leave_last_out(log: &InteractionLog, negatives: usize, seed_value: u64) -> Result<EvalSet> {
    let universe: Vec<String> = log
        .events()
        .iter()
        .map(|e| e.item.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut set = EvalSet {
        users: Vec::new(),
        train: BTreeMap::new(),
        held_out: Vec::new(),
        candidates: Vec::new(),
        held_out_seq: BTreeSet::new(),
    };
    for (user, clicks) in log.clicks_by_user() {
        let Some((last, rest)) = clicks.split_last() else { continue };
        set.train
            .insert(user.to_string(), rest.iter().map(|e| e.item.clone()).collect());
        if rest.is_empty() {
            continue;
        }
        let clicked: BTreeSet<&str> = clicks.iter().map(|e| e.item.as_str()).collect();
        let pool: Vec<&String> = universe.iter().filter(|i| !clicked.contains(i.as_str())).collect();
        let mut rng = seed::stage_rng(seed_value, &format!("negatives:{user}"));
        let mut cands: Vec<String> = pool
            .choose_multiple(&mut rng, negatives.min(pool.len()))
            .map(|s| s.to_string())
            .collect();
        cands.push(last.item.clone());
        cands.sort();
        set.users.push(user.to_string());
        set.held_out.push(last.item.clone());
        set.candidates.push(cands);
        set.held_out_seq.insert(last.seq);
    }
    if set.users.is_empty() {
        return Err(Error::EmptyEval);
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub scorer: String,
    pub metrics: RankingMetrics,
    /// Users scored by the popularity fallback.
    pub fallbacks: usize,
}

pub fn evaluate(set: &EvalSet, scorer: &Scorer, k: i64) -> Result<EvalResult> {
    let kk = usize::try_from(k).map_err(|_| Error::InvalidK(k))?;
    let mut recs = Vec::with_capacity(set.users.len());
    let mut fallbacks = 0;
    for (u, c) in set.users.iter().zip(&set.candidates) {
        let (top, fb) = rank_items(scorer, u, c, kk)?;
        fallbacks += usize::from(fb);
        recs.push(top);
    }
    let truth: Vec<BTreeSet<String>> = set.held_out.iter().map(|i| [i.clone()].into()).collect();
    Ok(EvalResult {
        scorer: format!("{:?}", scorer.kind()).to_lowercase(),
        metrics: ranking_metrics(&recs, &truth, k)?,
        fallbacks,
    })
}

/// Quantile class (0..classes) of each value by rank; ties share the class
/// of their first rank.
fn quantile_classes(counts: &BTreeMap<NodeId, usize>, classes: usize) -> BTreeMap<NodeId, usize> {
    let mut sorted: Vec<(usize, NodeId)> = counts.iter().map(|(&n, &c)| (c, n)).collect();
    sorted.sort();
    let n = sorted.len().max(1);
    let mut out = BTreeMap::new();
    let mut first_rank: BTreeMap<usize, usize> = BTreeMap::new();
    for (rank, (c, id)) in sorted.into_iter().enumerate() {
        let r = *first_rank.entry(c).or_insert(rank);
        out.insert(id, (r * classes / n).min(classes - 1));
    }
    out
}

/// Node-classification embeddings for users and items: the graph is built
/// from records minus the held-out events, nodes of `user_field` and
/// `item_field` are labeled by click-count quartile.
pub fn nodeclass_embeddings(
    records: &[BehaviorRecord],
    schema: &DatasetSchema,
    rule: &CompiledRule,
    set: &EvalSet,
    user_field: &str,
    item_field: &str,
    config: &NodeClassConfig,
) -> Result<EmbeddingIndex> {
    let train: Vec<BehaviorRecord> = records
        .iter()
        .enumerate()
        .filter(|(i, _)| !set.held_out_seq.contains(i))
        .map(|(_, r)| r.clone())
        .collect();
    let (space, sgs) = build_all(&train, schema, rule)?;
    let graph = accumulate(&sgs, &space)?;
    let fid = |name: &str| {
        space
            .field_id(name)
            .ok_or_else(|| Error::NotFound(format!("field {name}")))
    };
    let (uf, itf) = (fid(user_field)?, fid(item_field)?);
    let mut labels = BTreeMap::new();
    for f in [uf, itf] {
        let mut clicks: BTreeMap<NodeId, usize> = space.ids_of_field(f).into_iter().map(|n| (n, 0)).collect();
        for (u, h) in &set.train {
            if f == uf {
                if let Some(n) = space.lookup(uf, u) {
                    *clicks.entry(n).or_default() += h.len();
                }
            } else {
                for i in h {
                    if let Some(n) = space.lookup(itf, i) {
                        *clicks.entry(n).or_default() += 1;
                    }
                }
            }
        }
        labels.extend(quantile_classes(&clicks, 4));
    }
    let model = train_nodeclass(&graph, space.len(), rule.relation_count(), &labels, 4, config)?;
    let row = |f: usize, tok: &str| {
        space
            .lookup(f, tok)
            .map_or_else(|| vec![0.0; config.dim], |n| model.embeddings.row_slice(n.index()).to_vec())
    };
    let mut index = EmbeddingIndex::default();
    for u in &set.users {
        index.users.insert(u.clone(), row(uf, u));
    }
    for c in set.candidates.iter().flatten() {
        index.items.entry(c.clone()).or_insert_with(|| row(itf, c));
    }
    Ok(index)
}
