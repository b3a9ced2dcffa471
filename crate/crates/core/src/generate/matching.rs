use serde::{Deserialize, Serialize};

use super::slots::VaeGraph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Node `i` goes to the decoder slot of its node type.
    Identity,
    /// Maximum-similarity assignment between input nodes and decoder slots.
    Assignment,
}

/// Binary `k × n` assignment stored column-wise: input node `i` is matched
/// to decoder node `rows[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub k: usize,
    pub rows: Vec<usize>,
}

impl Assignment {
    pub fn identity(n: usize) -> Self {
        Self {
            k: n,
            rows: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Dense `X`, `k × n`.
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        let mut x = vec![vec![0u8; self.rows.len()]; self.k];
        for (i, &a) in self.rows.iter().enumerate() {
            x[a][i] = 1;
        }
        x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchOutcome {
    pub assignment: Assignment,
    /// Identity mode found a repeated node type and used the assignment solver.
    pub fell_back: bool,
}

/// Identity assignment by node type. `None` when two nodes share a slot.
pub fn identity_match(g: &VaeGraph, k: usize) -> Result<Option<Assignment>> {
    if g.node_count() > k {
        return Err(Error::TooManyNodes {
            nodes: g.node_count(),
            max: k,
        });
    }
    let mut used = vec![false; k];
    let mut rows = Vec::with_capacity(g.node_count());
    for &(slot, _) in &g.nodes {
        if slot >= k {
            return Err(Error::Graph(format!("slot {slot} outside {k} decoder nodes")));
        }
        if std::mem::replace(&mut used[slot], true) {
            return Ok(None);
        }
        rows.push(slot);
    }
    Ok(Some(Assignment { k, rows }))
}

/// Matches nodes to decoder slots. `similarity(i, a)` scores input node `i`
/// against decoder node `a` and is used by the assignment mode and as the
/// identity fallback.
pub fn match_nodes(
    g: &VaeGraph,
    k: usize,
    mode: MatchMode,
    similarity: impl Fn(usize, usize) -> f64,
) -> Result<MatchOutcome> {
    if mode == MatchMode::Identity {
        if let Some(assignment) = identity_match(g, k)? {
            return Ok(MatchOutcome {
                assignment,
                fell_back: false,
            });
        }
    } else if g.node_count() > k {
        return Err(Error::TooManyNodes {
            nodes: g.node_count(),
            max: k,
        });
    }
    let sim: Vec<Vec<f64>> = (0..g.node_count()).map(|i| (0..k).map(|a| similarity(i, a)).collect()).collect();
    Ok(MatchOutcome {
        assignment: Assignment {
            k,
            rows: max_assignment(&sim)?,
        },
        fell_back: mode == MatchMode::Identity,
    })
}

/// Exact maximum-weight assignment of `n` rows to distinct columns of an
/// `n × m` matrix, `n ≤ m` (Hungarian method with potentials, O(n²m)).
/// Returns the column of each row.
pub fn max_assignment(sim: &[Vec<f64>]) -> Result<Vec<usize>> {
    let n = sim.len();
    let m = sim.first().map_or(0, Vec::len);
    if sim.iter().any(|r| r.len() != m) || n > m {
        return Err(Error::shape("max_assignment", &[n, m], &[]));
    }
    if sim.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite similarity".into()));
    }
    // 1-based potentials; column 0 is the virtual start
    let cost = |i: usize, j: usize| -sim[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            rows[p[j] - 1] = j - 1;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute(sim: &[Vec<f64>]) -> f64 {
        fn go(sim: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == sim.len() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(sim[i][j] + go(sim, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(sim, 0, &mut vec![false; sim[0].len()])
    }

    #[test]
    fn small_examples() {
        assert_eq!(max_assignment(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), vec![0, 1]);
        let sim = [vec![0.1, 0.9, 0.2], vec![0.3, 0.8, 0.7]];
        assert_eq!(max_assignment(&sim).unwrap(), vec![1, 2]);
        assert!(max_assignment(&[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn optimal_against_exhaustive_search() {
        let mut rng = crate::seed::rng(3);
        for _ in 0..300 {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(n..=7);
            let sim: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| f64::from(rng.random_range(0..4u8)) + rng.random::<f64>() * 0.1).collect())
                .collect();
            let rows = max_assignment(&sim).unwrap();
            let mut cols = rows.clone();
            cols.sort_unstable();
            cols.dedup();
            assert_eq!(cols.len(), n);
            let got: f64 = rows.iter().enumerate().map(|(i, &j)| sim[i][j]).sum();
            assert!((got - brute(&sim)).abs() < 1e-9, "{sim:?}");
        }
    }

    #[test]
    fn identity_and_fallback() {
        let g = VaeGraph {
            nodes: vec![(0, 5), (1, 6)],
            edges: vec![(0, 1, 0)],
        };
        let m = match_nodes(&g, 2, MatchMode::Identity, |_, _| 0.0).unwrap();
        assert_eq!(m.assignment.matrix(), vec![vec![1, 0], vec![0, 1]]);
        assert!(!m.fell_back);

        let dup = VaeGraph {
            nodes: vec![(0, 5), (0, 7)],
            edges: vec![],
        };
        let m = match_nodes(&dup, 3, MatchMode::Identity, |i, a| if a == i + 1 { 1.0 } else { 0.0 }).unwrap();
        assert!(m.fell_back);
        assert_eq!(m.assignment.rows, vec![1, 2]);

        let big = VaeGraph {
            nodes: vec![(0, 1), (1, 2), (2, 3)],
            edges: vec![],
        };
        assert!(matches!(
            match_nodes(&big, 2, MatchMode::Identity, |_, _| 0.0),
            Err(Error::TooManyNodes { nodes: 3, max: 2 })
        ));
    }
}
