//! Factored Lawler affinities: geometric edge features, the hand-crafted
//! affinity matrix, pair scoring, and fusion with external affinities.
//!
//! The full Lawler matrix is never materialized. An [`AffinityMatrix`] keeps
//! the node-to-node block plus one value per (edge of i, edge of j) pair; the
//! implied dense matrix is symmetric, with each undirected edge pair
//! contributing identically in both orientations.

use std::collections::HashMap;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::graph::PointGraph;

/// Denominator guard in the angle formula; keeps vertical edges finite.
pub const ANGLE_EPS: f64 = 1e-9;

/// Geometric feature of one undirected edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFeature {
    /// Euclidean length, in unit-square units.
    pub length: f64,
    /// Orientation in radians, in (-pi/2, pi/2].
    pub angle: f64,
}

/// Factored affinity between a pair of graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n_i: usize,
    n_j: usize,
    node: Vec<f64>,
    edges_i: Vec<(usize, usize)>,
    edges_j: Vec<(usize, usize)>,
    edge: Vec<f64>,
    edge_index_i: HashMap<(usize, usize), usize>,
    edge_index_j: HashMap<(usize, usize), usize>,
}

impl AffinityMatrix {
    /// All-zero affinity for the given shapes and edge sets. Edges must be
    /// canonical `(a, b)` with `a < b` and in range.
    pub fn zeros(
        n_i: usize,
        n_j: usize,
        edges_i: Vec<(usize, usize)>,
        edges_j: Vec<(usize, usize)>,
    ) -> Result<Self> {
        for &(a, b) in edges_i.iter() {
            if a >= b || b >= n_i {
                return Err(Error::contract(format!("edge ({a},{b}) invalid for {n_i} nodes")));
            }
        }
        for &(a, b) in edges_j.iter() {
            if a >= b || b >= n_j {
                return Err(Error::contract(format!("edge ({a},{b}) invalid for {n_j} nodes")));
            }
        }
        let edge_index_i = edges_i.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let edge_index_j = edges_j.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        Ok(AffinityMatrix {
            n_i,
            n_j,
            node: vec![0.0; n_i * n_j],
            edge: vec![0.0; edges_i.len() * edges_j.len()],
            edges_i,
            edges_j,
            edge_index_i,
            edge_index_j,
        })
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    pub fn n_j(&self) -> usize {
        self.n_j
    }

    pub fn edges_i(&self) -> &[(usize, usize)] {
        &self.edges_i
    }

    pub fn edges_j(&self) -> &[(usize, usize)] {
        &self.edges_j
    }

    pub fn node(&self, r: usize, c: usize) -> f64 {
        self.node[r * self.n_j + c]
    }

    pub fn set_node(&mut self, r: usize, c: usize, v: f64) {
        self.node[r * self.n_j + c] = v;
    }

    pub fn edge_value(&self, ei: usize, ej: usize) -> f64 {
        self.edge[ei * self.edges_j.len() + ej]
    }

    pub fn set_edge(&mut self, ei: usize, ej: usize, v: f64) {
        let m = self.edges_j.len();
        self.edge[ei * m + ej] = v;
    }

    /// Index of the undirected edge {a, b} in graph i, if present.
    pub fn edge_id_i(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index_i.get(&(a.min(b), a.max(b))).copied()
    }

    /// Index of the undirected edge {a, b} in graph j, if present.
    pub fn edge_id_j(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index_j.get(&(a.min(b), a.max(b))).copied()
    }

    /// Largest entry over both blocks.
    pub fn max_entry(&self) -> f64 {
        let m1 = self.node.iter().copied().fold(0.0f64, f64::max);
        let m2 = self.edge.iter().copied().fold(0.0f64, f64::max);
        m1.max(m2)
    }

    /// The affinity with the two graphs' roles swapped.
    pub fn transposed(&self) -> AffinityMatrix {
        let mut out = AffinityMatrix::zeros(
            self.n_j,
            self.n_i,
            self.edges_j.clone(),
            self.edges_i.clone(),
        )
        .expect("shape already validated");
        for r in 0..self.n_i {
            for c in 0..self.n_j {
                out.set_node(c, r, self.node(r, c));
            }
        }
        for ei in 0..self.edges_i.len() {
            for ej in 0..self.edges_j.len() {
                out.set_edge(ej, ei, self.edge_value(ei, ej));
            }
        }
        out
    }

    fn same_shape(&self, other: &AffinityMatrix) -> bool {
        self.n_i == other.n_i
            && self.n_j == other.n_j
            && self.edges_i == other.edges_i
            && self.edges_j == other.edges_j
    }

    /// Raw Lawler score of a matching against this affinity, without shape
    /// checks. See [`affinity_score`] for the convention.
    pub fn score_unchecked(&self, x: &Assignment) -> f64 {
        let matched: Vec<(usize, usize)> = x.pairs().collect();
        let mut s = 0.0;
        for &(r, c) in &matched {
            s += self.node(r, c);
        }
        // Ordered matched node pairs: each undirected edge pair that is
        // realized by the matching contributes once per orientation.
        for (p, &(r1, c1)) in matched.iter().enumerate() {
            for &(r2, c2) in matched.iter().skip(p + 1) {
                if let (Some(ei), Some(ej)) = (self.edge_id_i(r1, r2), self.edge_id_j(c1, c2)) {
                    s += 2.0 * self.edge_value(ei, ej);
                }
            }
        }
        s
    }
}

/// Per-edge geometric features, in `g.edges` order.
///
/// Edge endpoints are ordered so the lexicographically larger point comes
/// first in the slope formula; a vertical edge therefore gets angle just
/// under +pi/2 rather than an arbitrary sign.
pub fn extract_edge_features(g: &PointGraph) -> Vec<EdgeFeature> {
    g.edges
        .iter()
        .map(|&(a, b)| {
            let (p, q) = (g.points[a], g.points[b]);
            let (lo, hi) = if (p[0], p[1]) <= (q[0], q[1]) { (p, q) } else { (q, p) };
            let dx = hi[0] - lo[0];
            let dy = hi[1] - lo[1];
            EdgeFeature {
                length: (dx * dx + dy * dy).sqrt(),
                angle: (dy / (dx + ANGLE_EPS)).atan(),
            }
        })
        .collect()
}

/// Hand-crafted geometric affinity: no node affinity, edge affinity
/// `exp(-(beta*|d1-d2| + (1-beta)*|t1-t2|) / sigma_sq)`.
pub fn build_raw_affinity(
    g_i: &PointGraph,
    g_j: &PointGraph,
    beta: f64,
    sigma_sq: f64,
) -> Result<AffinityMatrix> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::config(format!("beta {beta} outside [0, 1]")));
    }
    if sigma_sq <= 0.0 {
        return Err(Error::config(format!("sigma_sq {sigma_sq} must be positive")));
    }
    let feats_i = extract_edge_features(g_i);
    let feats_j = extract_edge_features(g_j);
    let mut k = AffinityMatrix::zeros(
        g_i.n_nodes(),
        g_j.n_nodes(),
        g_i.edges.clone(),
        g_j.edges.clone(),
    )?;
    for (ei, fi) in feats_i.iter().enumerate() {
        for (ej, fj) in feats_j.iter().enumerate() {
            let d = beta * (fi.length - fj.length).abs()
                + (1.0 - beta) * (fi.angle - fj.angle).abs();
            k.set_edge(ei, ej, (-d / sigma_sq).exp());
        }
    }
    Ok(k)
}

/// Lawler score `vec(X)^T K vec(X)` of a matching.
///
/// Convention: the node block contributes once per match; the edge block is
/// summed over ordered matched node pairs, so each realized undirected edge
/// pair counts once in each orientation.
pub fn affinity_score(x: &Assignment, k: &AffinityMatrix) -> Result<f64> {
    if x.rows() != k.n_i || x.cols() != k.n_j {
        return Err(Error::contract(format!(
            "affinity_score: matching {}x{} vs affinity {}x{}",
            x.rows(),
            x.cols(),
            k.n_i,
            k.n_j
        )));
    }
    Ok(k.score_unchecked(x))
}

/// Linear fusion `k_a + alpha * k_b`, rescaled by the max entry so values
/// stay within [0, 1]. Both inputs must share shapes and edge sets.
pub fn fuse_affinity(k_a: &AffinityMatrix, k_b: &AffinityMatrix, alpha: f64) -> Result<AffinityMatrix> {
    if !k_a.same_shape(k_b) {
        return Err(Error::contract("fuse_affinity: shapes or edge sets differ"));
    }
    let mut out = k_a.clone();
    for (o, b) in out.node.iter_mut().zip(&k_b.node) {
        *o += alpha * b;
    }
    for (o, b) in out.edge.iter_mut().zip(&k_b.edge) {
        *o += alpha * b;
    }
    let m = out.max_entry();
    if m > 0.0 {
        for v in out.node.iter_mut() {
            *v /= m;
        }
        for v in out.edge.iter_mut() {
            *v /= m;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PointGraph;

    fn graph(points: Vec<[f64; 2]>, edges: Vec<(usize, usize)>) -> PointGraph {
        PointGraph::new("t", points, edges).unwrap()
    }

    #[test]
    fn edge_features_basic() {
        let g = graph(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![(0, 1), (0, 2), (0, 3)],
        );
        let f = extract_edge_features(&g);
        assert!((f[0].length - 1.0).abs() < 1e-12);
        assert!(f[0].angle.abs() < 1e-9);
        // Vertical edge: huge finite slope, just under +pi/2.
        assert!((f[1].length - 1.0).abs() < 1e-12);
        assert!((f[1].angle - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
        // Diagonal edge.
        assert!((f[2].length - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((f[2].angle - std::f64::consts::FRAC_PI_4).abs() < 1e-8);
    }

    #[test]
    fn edge_features_orientation_independent() {
        let a = graph(vec![[0.2, 0.9], [0.7, 0.1]], vec![(0, 1)]);
        let b = graph(vec![[0.7, 0.1], [0.2, 0.9]], vec![(0, 1)]);
        assert_eq!(extract_edge_features(&a), extract_edge_features(&b));
    }

    #[test]
    fn raw_affinity_hand_values() {
        // Identical features: exp(0) = 1.
        let g = graph(vec![[0.0, 0.0], [0.5, 0.0]], vec![(0, 1)]);
        let k = build_raw_affinity(&g, &g, 0.9, 0.03).unwrap();
        assert!((k.edge_value(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(k.node(0, 0), 0.0);

        // Length difference 0.03, same angle: exp(-0.9 * 0.03 / 0.03).
        let h = graph(vec![[0.0, 0.0], [0.53, 0.0]], vec![(0, 1)]);
        let k = build_raw_affinity(&g, &h, 0.9, 0.03).unwrap();
        assert!((k.edge_value(0, 0) - (-0.9f64).exp()).abs() < 1e-9);

        // Same length, angle difference 0.3: exp(-0.1 * 0.3 / 0.03).
        let r = graph(vec![[0.0, 0.0], [0.3f64.cos() * 0.5, 0.3f64.sin() * 0.5]], vec![(0, 1)]);
        let k = build_raw_affinity(&g, &r, 0.9, 0.03).unwrap();
        assert!((k.edge_value(0, 0) - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn score_trivial_cases() {
        let k = AffinityMatrix::zeros(2, 2, vec![(0, 1)], vec![(0, 1)]).unwrap();
        let x = Assignment::identity(2);
        assert_eq!(affinity_score(&x, &k).unwrap(), 0.0);

        let mut k1 = AffinityMatrix::zeros(1, 1, vec![], vec![]).unwrap();
        k1.set_node(0, 0, 0.7);
        let x1 = Assignment::identity(1);
        assert!((affinity_score(&x1, &k1).unwrap() - 0.7).abs() < 1e-15);

        assert!(affinity_score(&Assignment::identity(3), &k1).is_err());
    }

    fn all_permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in all_permutations(n - 1) {
            for pos in 0..n {
                let mut p = rest.clone();
                p.insert(pos, n - 1);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn ground_truth_attains_brute_force_max_on_triangles() {
        let tri = graph(
            vec![[0.1, 0.1], [0.8, 0.2], [0.4, 0.9]],
            vec![(0, 1), (0, 2), (1, 2)],
        );
        // Same triangle with nodes relabeled by (0,1,2) -> (2,0,1).
        let perm = [2usize, 0, 1];
        let pts = vec![tri.points[1], tri.points[2], tri.points[0]];
        let tri2 = graph(pts, vec![(0, 1), (0, 2), (1, 2)]);
        let k = build_raw_affinity(&tri, &tri2, 0.9, 0.03).unwrap();

        let gt = Assignment::from_pairs(3, 3, &[(0, 2), (1, 0), (2, 1)]).unwrap();
        for (r, &c) in perm.iter().enumerate() {
            assert_eq!(gt.get(r), Some(c));
        }
        let gt_score = affinity_score(&gt, &k).unwrap();
        let best = all_permutations(3)
            .into_iter()
            .map(|p| {
                let pairs: Vec<_> = p.iter().enumerate().map(|(r, &c)| (r, c)).collect();
                let x = Assignment::from_pairs(3, 3, &pairs).unwrap();
                affinity_score(&x, &k).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((gt_score - best).abs() < 1e-12);
    }

    #[test]
    fn score_symmetric_under_pair_swap() {
        let a = graph(
            vec![[0.1, 0.2], [0.9, 0.3], [0.5, 0.8]],
            vec![(0, 1), (1, 2)],
        );
        let b = graph(
            vec![[0.2, 0.1], [0.8, 0.4], [0.4, 0.7], [0.9, 0.9]],
            vec![(0, 1), (0, 2), (2, 3)],
        );
        let k_ab = build_raw_affinity(&a, &b, 0.9, 0.03).unwrap();
        let k_ba = build_raw_affinity(&b, &a, 0.9, 0.03).unwrap();
        assert_eq!(k_ab.transposed(), k_ba);
        let x = Assignment::from_pairs(3, 4, &[(0, 1), (1, 0), (2, 2)]).unwrap();
        let s1 = affinity_score(&x, &k_ab).unwrap();
        let s2 = affinity_score(&x.transpose(), &k_ba).unwrap();
        assert!((s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn score_bound_and_relabel_invariance() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(2..6usize);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.random_bool(0.6) {
                        edges.push((a, b));
                    }
                }
            }
            let g = graph(pts.clone(), edges.clone());
            let k = build_raw_affinity(&g, &g, 0.9, 0.03).unwrap();
            let perm: Vec<usize> = {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut rng);
                p
            };
            let x = Assignment::from_pairs(
                n,
                n,
                &perm.iter().enumerate().map(|(r, &c)| (r, c)).collect::<Vec<_>>(),
            )
            .unwrap();
            let s = affinity_score(&x, &k).unwrap();
            let bound = n as f64 + 2.0 * edges.len() as f64;
            assert!(s >= 0.0 && s <= bound + 1e-9, "score {s} outside [0, {bound}]");

            // Relabel the row graph by a random permutation; the score of the
            // correspondingly relabeled matching is unchanged.
            let relab: Vec<usize> = {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut rng);
                p
            };
            let pts2: Vec<[f64; 2]> = {
                let mut v = vec![[0.0, 0.0]; n];
                for (old, &new) in relab.iter().enumerate() {
                    v[new] = pts[old];
                }
                v
            };
            let edges2: Vec<(usize, usize)> =
                edges.iter().map(|&(a, b)| (relab[a], relab[b])).collect();
            let g2 = graph(pts2, edges2);
            let k2 = build_raw_affinity(&g2, &g, 0.9, 0.03).unwrap();
            let x2 = Assignment::from_pairs(
                n,
                n,
                &perm
                    .iter()
                    .enumerate()
                    .map(|(r, &c)| (relab[r], c))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let s2 = affinity_score(&x2, &k2).unwrap();
            assert!((s - s2).abs() < 1e-9, "relabeling changed score: {s} vs {s2}");
        }
    }

    #[test]
    fn fuse_examples() {
        let g = graph(vec![[0.0, 0.0], [0.5, 0.0]], vec![(0, 1)]);
        let h = graph(vec![[0.0, 0.0], [0.53, 0.0]], vec![(0, 1)]);
        let k_a = build_raw_affinity(&g, &h, 0.9, 0.03).unwrap();

        // alpha = 0: k_a rescaled by its own max.
        let fused = fuse_affinity(&k_a, &k_a, 0.0).unwrap();
        let m = k_a.max_entry();
        assert!((fused.edge_value(0, 0) - k_a.edge_value(0, 0) / m).abs() < 1e-15);

        // k_a = k_b, alpha = 1: proportional, so same after rescale.
        let fused = fuse_affinity(&k_a, &k_a, 1.0).unwrap();
        assert!((fused.edge_value(0, 0) - k_a.edge_value(0, 0) / m).abs() < 1e-15);

        // Scalar case before rescale: 0.2 + 0.5 * 0.8 = 0.6 (max entry here
        // is the same cell, so after rescale it is exactly 1).
        let mut a = AffinityMatrix::zeros(1, 1, vec![], vec![]).unwrap();
        a.set_node(0, 0, 0.2);
        let mut b = AffinityMatrix::zeros(1, 1, vec![], vec![]).unwrap();
        b.set_node(0, 0, 0.8);
        let f = fuse_affinity(&a, &b, 0.5).unwrap();
        assert!((f.node(0, 0) - 1.0).abs() < 1e-15);

        let other = AffinityMatrix::zeros(2, 2, vec![], vec![]).unwrap();
        assert!(fuse_affinity(&a, &other, 0.5).is_err());
    }
}
