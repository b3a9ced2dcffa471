use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub k: usize,
    pub users: usize,
    pub recall: f64,
    pub mrr: f64,
    pub ndcg: f64,
    pub hit: f64,
    pub precision: f64,
}

/// Per-user metrics averaged over users. Ranked lists are truncated to
/// `k`; NDCG uses binary relevance, which for a single relevant item is
/// `1 / log2(P + 1)` at hit position `P`.
pub fn ranking_metrics(recommendations: &[Vec<String>], truth: &[BTreeSet<String>], k: i64) -> Result<RankingMetrics> {
    if k <= 0 {
        return Err(Error::InvalidK(k));
    }
    if recommendations.len() != truth.len() {
        return Err(Error::InvalidArgument("one truth set per user required".into()));
    }
    if truth.is_empty() {
        return Err(Error::EmptyEval);
    }
    let k = k as usize;
    let mut m = RankingMetrics {
        k,
        users: truth.len(),
        recall: 0.0,
        mrr: 0.0,
        ndcg: 0.0,
        hit: 0.0,
        precision: 0.0,
    };
    for (recs, t) in recommendations.iter().zip(truth) {
        let top = &recs[..recs.len().min(k)];
        let hits: Vec<usize> = top
            .iter()
            .enumerate()
            .filter(|(_, r)| t.contains(*r))
            .map(|(i, _)| i + 1)
            .collect();
        if hits.is_empty() {
            continue;
        }
        m.hit += 1.0;
        m.mrr += 1.0 / hits[0] as f64;
        m.precision += hits.len() as f64 / k as f64;
        m.recall += hits.len() as f64 / t.len() as f64;
        let dcg: f64 = hits.iter().map(|&p| 1.0 / (p as f64 + 1.0).log2()).sum();
        let idcg: f64 = (1..=t.len().min(k)).map(|p| 1.0 / (p as f64 + 1.0).log2()).sum();
        m.ndcg += dcg / idcg;
    }
    let n = truth.len() as f64;
    m.recall /= n;
    m.mrr /= n;
    m.ndcg /= n;
    m.hit /= n;
    m.precision /= n;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(item: &str) -> BTreeSet<String> {
        [item.to_string()].into()
    }

    fn list(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn hit_at_first_position() {
        let m = ranking_metrics(&[list(&["a", "b", "c"])], &[one("a")], 10).unwrap();
        assert_eq!((m.ndcg, m.mrr, m.hit, m.recall), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(m.precision, 0.1);
    }

    #[test]
    fn hit_at_third_position() {
        let m = ranking_metrics(&[list(&["x", "y", "a"])], &[one("a")], 10).unwrap();
        assert_eq!(m.ndcg, 0.5);
        assert_eq!(m.mrr, 1.0 / 3.0);
    }

    #[test]
    fn miss_and_invalid_k() {
        let m = ranking_metrics(&[list(&["x"])], &[one("a")], 10).unwrap();
        assert_eq!((m.ndcg, m.mrr, m.hit, m.recall, m.precision), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(matches!(ranking_metrics(&[list(&["x"])], &[one("a")], 0), Err(Error::InvalidK(0))));
        // beyond K is a miss
        let m = ranking_metrics(&[list(&["x", "a"])], &[one("a")], 1).unwrap();
        assert_eq!(m.hit, 0.0);
    }

    /// Brute-force oracle on a five-user fixture.
    #[test]
    fn five_user_fixture() {
        let recs = vec![
            list(&["a", "b", "c", "d"]),
            list(&["b", "a", "c", "d"]),
            list(&["c", "d", "a", "b"]),
            list(&["d", "c", "b", "a"]),
            list(&["b", "c", "d", "e"]),
        ];
        let truth = vec![one("a"), one("a"), one("a"), one("a"), one("a")];
        let m = ranking_metrics(&recs, &truth, 3).unwrap();
        // positions: 1, 2, 3, miss (4 > K), miss
        let pos: [Option<f64>; 5] = [Some(1.0), Some(2.0), Some(3.0), None, None];
        let mean = |f: &dyn Fn(f64) -> f64| pos.iter().map(|p| p.map_or(0.0, |x| f(x))).sum::<f64>() / 5.0;
        assert_eq!(m.hit, 0.6);
        assert!((m.mrr - mean(&|p| 1.0 / p)).abs() < 1e-15);
        assert!((m.ndcg - mean(&|p| 1.0 / (p + 1.0).log2())).abs() < 1e-15);
        assert!((m.precision - 0.2).abs() < 1e-15);
        assert_eq!(m.recall, m.hit);
        assert!(m.mrr <= m.hit);
    }
}
