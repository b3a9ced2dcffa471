use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub value: f64,
    /// Set when one series has a single category and V is undefined.
    pub degenerate: bool,
}

/// Cramér's V from the χ² statistic of the contingency table.
pub fn cramers_v<A: AsRef<str>, B: AsRef<str>>(x: &[A], y: &[B]) -> Result<Association> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("series lengths {} and {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::EmptyEval);
    }
    let mut table: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut rows: BTreeMap<&str, f64> = BTreeMap::new();
    let mut cols: BTreeMap<&str, f64> = BTreeMap::new();
    for (a, b) in x.iter().zip(y) {
        *table.entry((a.as_ref(), b.as_ref())).or_default() += 1.0;
        *rows.entry(a.as_ref()).or_default() += 1.0;
        *cols.entry(b.as_ref()).or_default() += 1.0;
    }
    let k = rows.len().min(cols.len());
    if k < 2 {
        return Ok(Association {
            value: 0.0,
            degenerate: true,
        });
    }
    let n = x.len() as f64;
    let mut chi2 = 0.0;
    for (r, rn) in &rows {
        for (c, cn) in &cols {
            let e = rn * cn / n;
            let o = table.get(&(*r, *c)).copied().unwrap_or(0.0);
            chi2 += (o - e) * (o - e) / e;
        }
    }
    Ok(Association {
        value: (chi2 / (n * (k - 1) as f64)).sqrt().min(1.0),
        degenerate: false,
    })
}

/// Pearson correlation for numeric pairs; `None` when a series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("series lengths {} and {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::EmptyEval);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTally {
    pub group: String,
    pub correct: usize,
    pub incorrect: usize,
}

impl GroupTally {
    pub fn accuracy(&self) -> f64 {
        let n = self.correct + self.incorrect;
        if n == 0 {
            0.0
        } else {
            self.correct as f64 / n as f64
        }
    }
}

pub const OTHER_GROUP: &str = "other";

/// Correct/incorrect counts per group over records whose true label is one
/// of `targets`. Group values outside `known_groups` (when given) are pooled
/// under "other".
pub fn subgroup_report<S: AsRef<str>>(
    y_true: &[S],
    y_pred: &[S],
    groups: &[S],
    targets: &[&str],
    known_groups: Option<&[&str]>,
) -> Result<Vec<GroupTally>> {
    if y_true.len() != y_pred.len() || y_true.len() != groups.len() {
        return Err(Error::InvalidArgument("series lengths differ".into()));
    }
    for t in targets {
        if !y_true.iter().any(|y| y.as_ref() == *t) {
            return Err(Error::NotFound(format!("target class {t:?}")));
        }
    }
    let mut out: BTreeMap<String, GroupTally> = BTreeMap::new();
    for ((t, p), g) in y_true.iter().zip(y_pred).zip(groups) {
        if !targets.contains(&t.as_ref()) {
            continue;
        }
        let g = match known_groups {
            Some(known) if !known.contains(&g.as_ref()) => OTHER_GROUP,
            _ => g.as_ref(),
        };
        let e = out.entry(g.to_string()).or_insert_with(|| GroupTally {
            group: g.to_string(),
            correct: 0,
            incorrect: 0,
        });
        if t.as_ref() == p.as_ref() {
            e.correct += 1;
        } else {
            e.incorrect += 1;
        }
    }
    Ok(out.into_values().collect())
}

/// `group,correct,incorrect,accuracy` with five-decimal accuracies.
pub fn subgroup_csv(tallies: &[GroupTally]) -> String {
    let mut s = String::from("group,correct,incorrect,accuracy\n");
    for t in tallies {
        s.push_str(&format!("{},{},{},{:.5}\n", t.group, t.correct, t.incorrect, t.accuracy()));
    }
    s
}
