use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    Pop,
    ItemKnn,
    Embed,
}

impl std::str::FromStr for ScorerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pop" => Ok(ScorerKind::Pop),
            "itemknn" | "item-knn" => Ok(ScorerKind::ItemKnn),
            "embed" | "embedding-dot" => Ok(ScorerKind::Embed),
            other => Err(Error::InvalidArgument(format!("unknown scorer {other:?}"))),
        }
    }
}

/// Click counts learned from training histories.
#[derive(Clone, Debug, Default)]
pub struct ClickStats {
    pub item_counts: BTreeMap<String, u64>,
    /// item → user → clicks.
    pub item_users: BTreeMap<String, BTreeMap<String, u64>>,
    pub user_items: BTreeMap<String, BTreeSet<String>>,
}

impl ClickStats {
    pub fn new(histories: &BTreeMap<String, Vec<String>>) -> Self {
        let mut s = Self::default();
        for (u, h) in histories {
            for i in h {
                *s.item_counts.entry(i.clone()).or_default() += 1;
                *s.item_users.entry(i.clone()).or_default().entry(u.clone()).or_default() += 1;
                s.user_items.entry(u.clone()).or_default().insert(i.clone());
            }
        }
        s
    }

    fn norm(&self, item: &str) -> f64 {
        self.item_users
            .get(item)
            .map_or(0.0, |m| m.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt())
    }

    /// Cosine between the user-click vectors of two items.
    pub fn item_cosine(&self, a: &str, b: &str) -> f64 {
        let (Some(ua), Some(ub)) = (self.item_users.get(a), self.item_users.get(b)) else {
            return 0.0;
        };
        let (small, large) = if ua.len() <= ub.len() { (ua, ub) } else { (ub, ua) };
        let dot: f64 = small
            .iter()
            .filter_map(|(u, &c)| large.get(u).map(|&d| (c * d) as f64))
            .sum();
        if dot == 0.0 {
            return 0.0;
        }
        dot / (self.norm(a) * self.norm(b))
    }
}

/// User and item vectors for dot-product scoring.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingIndex {
    pub users: BTreeMap<String, Vec<f64>>,
    pub items: BTreeMap<String, Vec<f64>>,
}

pub enum Scorer<'a> {
    Pop(&'a ClickStats),
    ItemKnn(&'a ClickStats),
    Embed(&'a EmbeddingIndex, &'a ClickStats),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub scores: Vec<f64>,
    /// The scorer could not handle this user and used popularity instead.
    pub fell_back: bool,
}

impl Scorer<'_> {
    pub fn kind(&self) -> ScorerKind {
        match self {
            Scorer::Pop(_) => ScorerKind::Pop,
            Scorer::ItemKnn(_) => ScorerKind::ItemKnn,
            Scorer::Embed(..) => ScorerKind::Embed,
        }
    }

    pub fn score(&self, user: &str, candidates: &[String]) -> Result<Scored> {
        let pop = |stats: &ClickStats| Scored {
            scores: candidates
                .iter()
                .map(|c| stats.item_counts.get(c).copied().unwrap_or(0) as f64)
                .collect(),
            fell_back: false,
        };
        match self {
            Scorer::Pop(stats) => Ok(pop(stats)),
            Scorer::ItemKnn(stats) => match stats.user_items.get(user) {
                Some(hist) if !hist.is_empty() => Ok(Scored {
                    scores: candidates
                        .iter()
                        .map(|c| hist.iter().map(|h| stats.item_cosine(h, c)).sum())
                        .collect(),
                    fell_back: false,
                }),
                _ => Ok(Scored {
                    fell_back: true,
                    ..pop(stats)
                }),
            },
            Scorer::Embed(index, stats) => {
                let Some(u) = index.users.get(user) else {
                    return Ok(Scored {
                        fell_back: true,
                        ..pop(stats)
                    });
                };
                let scores = candidates
                    .iter()
                    .map(|c| {
                        let v = index.items.get(c).ok_or_else(|| Error::MissingEmbedding(c.clone()))?;
                        Ok(u.iter().zip(v).map(|(a, b)| a * b).sum())
                    })
                    .collect::<Result<_>>()?;
                Ok(Scored {
                    scores,
                    fell_back: false,
                })
            }
        }
    }
}

/// Top `k` candidates by descending score; ties by item token.
pub fn top_k(candidates: &[String], scores: &[f64], k: usize) -> Vec<String> {
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| candidates[a].cmp(&candidates[b]))
    });
    idx.into_iter().take(k).map(|i| candidates[i].clone()).collect()
}

pub fn rank_items(scorer: &Scorer, user: &str, candidates: &[String], k: usize) -> Result<(Vec<String>, bool)> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("no candidates".into()));
    }
    let s = scorer.score(user, candidates)?;
    Ok((top_k(candidates, &s.scores, k), s.fell_back))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(pairs: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
        pairs
            .iter()
            .map(|(u, h)| (u.to_string(), h.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    fn c(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pop_top_one() {
        let h = hist(&[("a", &["i1", "i1", "i1", "i2"]), ("b", &["i1", "i1", "i2", "i2"])]);
        let s = ClickStats::new(&h);
        let (top, _) = rank_items(&Scorer::Pop(&s), "x", &c(&["i2", "i1"]), 1).unwrap();
        assert_eq!(top, vec!["i1"]);
    }

    #[test]
    fn itemknn_two_item_oracle() {
        // only i and j are co-clicked (by v); k is clicked by w alone
        let h = hist(&[("u", &["i"]), ("v", &["i", "j"]), ("w", &["k", "k", "k"])]);
        let s = ClickStats::new(&h);
        // cos(i, j) = 1 / (√2 · 1)
        assert!((s.item_cosine("i", "j") - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.item_cosine("i", "k"), 0.0);
        let (top, fb) = rank_items(&Scorer::ItemKnn(&s), "u", &c(&["k", "j"]), 1).unwrap();
        assert_eq!((top, fb), (vec!["j".to_string()], false));
        let (_, cold) = rank_items(&Scorer::ItemKnn(&s), "nobody", &c(&["k", "j"]), 1).unwrap();
        assert!(cold);
    }

    #[test]
    fn orthogonal_embeddings_fall_to_tie_rule() {
        let s = ClickStats::default();
        let mut e = EmbeddingIndex::default();
        e.users.insert("u".into(), vec![1.0, 0.0]);
        e.items.insert("b".into(), vec![0.0, 1.0]);
        e.items.insert("a".into(), vec![0.0, 2.0]);
        let sc = Scorer::Embed(&e, &s);
        let scored = sc.score("u", &c(&["b", "a"])).unwrap();
        assert_eq!(scored.scores, vec![0.0, 0.0]);
        assert_eq!(rank_items(&sc, "u", &c(&["b", "a"]), 2).unwrap().0, vec!["a", "b"]);
    }

    #[test]
    fn scorer_names_parse() {
        assert_eq!("itemknn".parse::<ScorerKind>().unwrap(), ScorerKind::ItemKnn);
        assert!("bpr".parse::<ScorerKind>().is_err());
    }
}
