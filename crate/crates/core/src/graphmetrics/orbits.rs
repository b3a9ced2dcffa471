use serde::{Deserialize, Serialize};

use super::labeled::LabeledGraph;

pub const ORBITS: usize = 15;

/// Per-node counts of the 15 orbits of connected graphlets on 2 to 4 nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitSignature {
    pub counts: Vec<[u64; ORBITS]>,
}

impl OrbitSignature {
    /// Counts of orbit `i` across nodes.
    pub fn orbit(&self, i: usize) -> Vec<u64> {
        self.counts.iter().map(|c| c[i]).collect()
    }
}

/// Orbit of each member of a connected induced graphlet, from the degrees
/// inside the graphlet.
///
/// 0 edge; 1-2 path P3 (end, middle); 3 triangle; 4-5 path P4; 6-7 star;
/// 8 cycle C4; 9-11 paw (pendant, triangle side, hub); 12-13 diamond;
/// 14 K4.
fn classify(deg: &[usize], edges: usize, out: &mut [usize]) {
    let max = deg.iter().copied().max().unwrap_or(0);
    for (o, &d) in out.iter_mut().zip(deg) {
        *o = match (deg.len(), edges) {
            (2, _) => 0,
            (3, 2) => [0, 1, 2][d],
            (3, _) => 3,
            (4, 3) if max == 3 => [0, 6, 0, 7][d],
            (4, 3) => [0, 4, 5][d],
            (4, 4) if max == 3 => [0, 9, 10, 11][d],
            (4, 4) => 8,
            (4, 5) => [0, 0, 12, 13][d],
            _ => 14,
        };
    }
}

/// Enumerates every connected induced subgraph on 2 to 4 nodes once (ESU
/// enumeration) and tallies each member's orbit. Multi-edges and edge types
/// are ignored.
pub fn orbit_counts(g: &LabeledGraph) -> OrbitSignature {
    let nb = g.neighbor_lists();
    let adj = g.adjacency();
    let mut counts = vec![[0u64; ORBITS]; g.node_count()];
    let mut sub = Vec::with_capacity(4);
    for v in 0..nb.len() {
        sub.push(v);
        let ext: Vec<usize> = nb[v].iter().copied().filter(|&u| u > v).collect();
        extend(&nb, &adj, &mut sub, ext, v, &mut counts);
        sub.pop();
    }
    OrbitSignature { counts }
}

fn extend(
    nb: &[Vec<usize>],
    adj: &[Vec<bool>],
    sub: &mut Vec<usize>,
    mut ext: Vec<usize>,
    root: usize,
    counts: &mut [[u64; ORBITS]],
) {
    if sub.len() >= 2 {
        tally(adj, sub, counts);
    }
    if sub.len() == 4 {
        return;
    }
    while let Some(w) = ext.pop() {
        let mut next = ext.clone();
        for &u in &nb[w] {
            if u > root && !sub.contains(&u) && !next.contains(&u) && sub.iter().all(|&s| !adj[s][u]) {
                next.push(u);
            }
        }
        sub.push(w);
        extend(nb, adj, sub, next, root, counts);
        sub.pop();
    }
}

fn tally(adj: &[Vec<bool>], sub: &[usize], counts: &mut [[u64; ORBITS]]) {
    let mut deg = [0usize; 4];
    let mut edges = 0;
    for i in 0..sub.len() {
        for j in i + 1..sub.len() {
            if adj[sub[i]][sub[j]] {
                deg[i] += 1;
                deg[j] += 1;
                edges += 1;
            }
        }
    }
    let mut orbit = [0usize; 4];
    classify(&deg[..sub.len()], edges, &mut orbit[..sub.len()]);
    for (i, &v) in sub.iter().enumerate() {
        counts[v][orbit[i]] += 1;
    }
}

/// Weighted sum over orbits of the cosine between the two graphs' per-node
/// count sequences, each sorted descending and zero-padded to equal length.
/// Two all-zero sequences count as identical (1); zero against non-zero
/// counts as 0. `weights = None` means uniform 1/15.
pub fn orbit_similarity(g1: &LabeledGraph, g2: &LabeledGraph, weights: Option<&[f64; ORBITS]>) -> f64 {
    signature_similarity(&orbit_counts(g1), &orbit_counts(g2), weights)
}

pub fn signature_similarity(s1: &OrbitSignature, s2: &OrbitSignature, weights: Option<&[f64; ORBITS]>) -> f64 {
    let uniform = [1.0 / ORBITS as f64; ORBITS];
    let w = weights.unwrap_or(&uniform);
    (0..ORBITS)
        .map(|i| {
            let mut a = s1.orbit(i);
            let mut b = s2.orbit(i);
            a.sort_unstable_by(|x, y| y.cmp(x));
            b.sort_unstable_by(|x, y| y.cmp(x));
            let len = a.len().max(b.len());
            a.resize(len, 0);
            b.resize(len, 0);
            w[i] * padded_cosine(&a, &b)
        })
        .sum()
}

fn padded_cosine(a: &[u64], b: &[u64]) -> f64 {
    let na: f64 = a.iter().map(|&x| (x * x) as f64).sum();
    let nb: f64 = b.iter().map(|&x| (x * x) as f64).sum();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => a.iter().zip(b).map(|(&x, &y)| (x * y) as f64).sum::<f64>() / (na.sqrt() * nb.sqrt()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphmetrics::labeled::next_permutation;
    use rand::Rng;

    /// Graphlet templates: edge list over positions and each position's orbit.
    const TEMPLATES: &[(usize, &[(usize, usize)], &[usize])] = &[
        (2, &[(0, 1)], &[0, 0]),
        (3, &[(0, 1), (1, 2)], &[1, 2, 1]),
        (3, &[(0, 1), (1, 2), (0, 2)], &[3, 3, 3]),
        (4, &[(0, 1), (1, 2), (2, 3)], &[4, 5, 5, 4]),
        (4, &[(0, 1), (0, 2), (0, 3)], &[7, 6, 6, 6]),
        (4, &[(0, 1), (1, 2), (2, 3), (0, 3)], &[8, 8, 8, 8]),
        (4, &[(0, 1), (1, 2), (0, 2), (2, 3)], &[10, 10, 11, 9]),
        (4, &[(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)], &[13, 12, 13, 12]),
        (4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], &[14, 14, 14, 14]),
    ];

    /// Every node subset of size 2..=4, matched against the templates by
    /// trying all bijections.
    fn oracle(g: &LabeledGraph) -> Vec<[u64; ORBITS]> {
        let n = g.node_count();
        let adj = g.adjacency();
        let mut counts = vec![[0u64; ORBITS]; n];
        for mask in 0u32..(1 << n) {
            let sub: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            if !(2..=4).contains(&sub.len()) {
                continue;
            }
            'templates: for &(size, edges, orbits) in TEMPLATES {
                if size != sub.len() {
                    continue;
                }
                let mut t = vec![vec![false; size]; size];
                for &(a, b) in edges {
                    t[a][b] = true;
                    t[b][a] = true;
                }
                let mut perm: Vec<usize> = (0..size).collect();
                loop {
                    let ok = (0..size).all(|i| (0..size).all(|j| i == j || adj[sub[i]][sub[j]] == t[perm[i]][perm[j]]));
                    if ok {
                        for i in 0..size {
                            counts[sub[i]][orbits[perm[i]]] += 1;
                        }
                        break 'templates;
                    }
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
            }
        }
        counts
    }

    #[test]
    fn path_and_triangle() {
        let path = LabeledGraph::unlabeled(3, [(0, 1), (1, 2)]).unwrap();
        let s = orbit_counts(&path);
        assert_eq!(s.orbit(0), vec![1, 2, 1]);
        assert_eq!(s.orbit(1), vec![1, 0, 1]);
        assert_eq!(s.orbit(2), vec![0, 1, 0]);
        let tri = LabeledGraph::unlabeled(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let s = orbit_counts(&tri);
        for c in &s.counts {
            assert_eq!(c[0], 2);
            assert_eq!(c[3], 1);
            assert_eq!(c.iter().sum::<u64>(), 3);
        }
        let edge = orbit_counts(&LabeledGraph::unlabeled(2, [(0, 1)]).unwrap());
        assert_eq!(edge.counts, vec![{
            let mut c = [0; ORBITS];
            c[0] = 1;
            c
        }; 2]);
    }

    #[test]
    fn matches_subset_oracle() {
        let mut rng = crate::seed::rng(11);
        for _ in 0..60 {
            let n = rng.random_range(1..=8);
            let p = rng.random_range(0.1..0.9);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random_bool(p) {
                        edges.push((a, b));
                    }
                }
            }
            let g = LabeledGraph::unlabeled(n, edges).unwrap();
            assert_eq!(orbit_counts(&g).counts, oracle(&g), "{g:?}");
        }
    }

    #[test]
    fn similarity_examples() {
        let tri = LabeledGraph::unlabeled(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!((orbit_similarity(&tri, &tri, None) - 1.0).abs() < 1e-15);

        let edge = LabeledGraph::unlabeled(2, [(0, 1)]).unwrap();
        let empty = LabeledGraph::unlabeled(2, []).unwrap();
        let s = orbit_similarity(&edge, &empty, None);
        assert!((s - 14.0 / 15.0).abs() < 1e-15);

        let two = LabeledGraph::unlabeled(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let mut only_orbit0 = [0.0; ORBITS];
        only_orbit0[0] = 1.0;
        let s = orbit_similarity(&two, &tri, Some(&only_orbit0));
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12, "{s}");
    }
}
