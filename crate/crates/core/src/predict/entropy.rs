use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shannon entropy in bits of the empirical item distribution.
pub fn entropy<S: AsRef<str>>(history: &[S]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for h in history {
        *counts.entry(h.as_ref()).or_default() += 1;
    }
    Ok(entropy_of_counts(counts.values().copied()))
}

pub fn entropy_of_counts(counts: impl IntoIterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    let n: usize = counts.iter().sum();
    let n = n as f64;
    let s: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // −Σ p log p is exactly 0 for one item; avoid reporting −0
    s.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Prefix length (events per user).
    pub checkpoint: usize,
    pub mean_entropy: f64,
    pub users: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub points: Vec<CurvePoint>,
    /// Checkpoints dropped because no user had history there.
    pub omitted: Vec<usize>,
}

/// Per-user entropy over each checkpoint-length prefix.
pub fn entropy_profile<S: AsRef<str>>(history: &[S], checkpoints: &[usize]) -> Vec<(usize, f64)> {
    checkpoints
        .iter()
        .filter_map(|&t| {
            let len = t.min(history.len());
            entropy(&history[..len]).ok().map(|s| (len, s))
        })
        .collect()
}

/// Mean entropy of the selected users' history prefixes. A user whose
/// history is shorter than a checkpoint contributes its whole history.
pub fn entropy_curve<S: AsRef<str>>(
    histories: &BTreeMap<String, Vec<S>>,
    users: &[String],
    checkpoints: &[usize],
) -> Result<EntropyCurve> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("checkpoints must increase".into()));
    }
    let mut curve = EntropyCurve {
        points: Vec::new(),
        omitted: Vec::new(),
    };
    for &t in checkpoints {
        let mut sum = 0.0;
        let mut n = 0;
        for u in users {
            let Some(h) = histories.get(u) else { continue };
            let len = t.min(h.len());
            if len == 0 {
                continue;
            }
            sum += entropy(&h[..len])?;
            n += 1;
        }
        if n == 0 {
            curve.omitted.push(t);
        } else {
            curve.points.push(CurvePoint {
                checkpoint: t,
                mean_entropy: sum / n as f64,
                users: n,
            });
        }
    }
    Ok(curve)
}

impl EntropyCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("checkpoint,mean_entropy,users\n");
        for p in &self.points {
            s.push_str(&format!("{},{:.12},{}\n", p.checkpoint, p.mean_entropy, p.users));
        }
        s
    }
}
