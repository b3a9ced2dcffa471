use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::record::BehaviorRecord;
use crate::seed;

/// Label frequencies, most frequent first; ties by label token.
pub fn label_ranking(records: &[BehaviorRecord]) -> Vec<(String, usize)> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        if let Some(l) = &r.label {
            *freq.entry(l.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().map(|(l, c)| (l.to_string(), c)).collect();
    // BTreeMap order is already by label, and the sort is stable.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked
}

/// Keeps records whose label is among the `k` most frequent.
pub fn top_k_labels(records: &[BehaviorRecord], k: usize) -> Result<Vec<BehaviorRecord>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let ranked = label_ranking(records);
    if ranked.is_empty() {
        return Err(Error::NoLabels);
    }
    let keep: Vec<&str> = ranked.iter().take(k).map(|(l, _)| l.as_str()).collect();
    Ok(records
        .iter()
        .filter(|r| r.label.as_deref().is_some_and(|l| keep.contains(&l)))
        .cloned()
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded split stratified by label. Within each label the shuffled indices
/// are cut at `train` and `train + valid` fractions; outputs are sorted.
pub fn stratified_split(labels: &[usize], train: f64, valid: f64, seed_value: u64) -> Split {
    let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut rng = seed::rng(seed_value);
    let mut split = Split::default();
    for (_, mut idx) in by_label {
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_train = ((n as f64) * train).round() as usize;
        let n_valid = (((n as f64) * valid).round() as usize).min(n - n_train.min(n));
        let n_train = n_train.min(n);
        split.train.extend_from_slice(&idx[..n_train]);
        split.valid.extend_from_slice(&idx[n_train..n_train + n_valid]);
        split.test.extend_from_slice(&idx[n_train + n_valid..]);
    }
    split.train.sort_unstable();
    split.valid.sort_unstable();
    split.test.sort_unstable();
    split
}
