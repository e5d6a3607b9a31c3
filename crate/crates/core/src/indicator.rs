//! Cluster indicators over a graph set: strict divisions, the relaxed
//! ranking schemes (global, local, fuse), and the connect-until scheme.
//!
//! An indicator is a symmetric boolean N x N matrix with a fixed true
//! diagonal. A transitive indicator is exactly a strict cluster division;
//! the relaxed schemes drop transitivity and keep only a pair budget.

use serde::{Deserialize, Serialize};

use crate::config::Scheme;
use crate::error::{Error, Result};

/// Symmetric N x N pairwise scores with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    n: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(n: usize) -> Self {
        ScoreMatrix { n, values: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Symmetric boolean pair-selection matrix with fixed true diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterIndicator {
    n: usize,
    selected: Vec<bool>,
}

impl ClusterIndicator {
    /// Diagonal-only indicator (every graph alone).
    pub fn new(n: usize) -> Self {
        let mut selected = vec![false; n * n];
        for i in 0..n {
            selected[i * n + i] = true;
        }
        ClusterIndicator { n, selected }
    }

    /// All-pairs indicator (one cluster).
    pub fn complete(n: usize) -> Self {
        ClusterIndicator { n, selected: vec![true; n * n] }
    }

    pub fn n_graphs(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.selected[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`. The diagonal is immutable.
    pub fn set_pair(&mut self, i: usize, j: usize, on: bool) {
        if i == j {
            return;
        }
        self.selected[i * self.n + j] = on;
        self.selected[j * self.n + i] = on;
    }

    /// Number of selected ordered off-diagonal entries.
    pub fn ordered_selected(&self) -> usize {
        let mut c = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.get(i, j) {
                    c += 1;
                }
            }
        }
        c
    }

    /// Selected unordered pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn selected_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Connected-component label per graph, labeled by first appearance.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut labels = vec![usize::MAX; self.n];
        let mut next = 0;
        for start in 0..self.n {
            if labels[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            labels[start] = next;
            while let Some(u) = stack.pop() {
                for v in 0..self.n {
                    if v != u && self.get(u, v) && labels[v] == usize::MAX {
                        labels[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        labels
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.component_labels().iter().all(|&l| l == 0)
    }
}

/// A strict partition of the graph set into `n_clusters` labeled clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterDivision {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl ClusterDivision {
    /// Builds from per-graph labels; every label in `[0, n_clusters)` must
    /// occur at least once, where `n_clusters = max(labels) + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::contract("cluster division over zero graphs"));
        }
        let n_clusters = labels.iter().max().unwrap() + 1;
        let mut seen = vec![false; n_clusters];
        for &l in &labels {
            seen[l] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::contract("cluster ids must be contiguous and all used"));
        }
        Ok(ClusterDivision { labels, n_clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_graphs(&self) -> usize {
        self.labels.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Graph indices of each cluster.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (g, &l) in self.labels.iter().enumerate() {
            out[l].push(g);
        }
        out
    }

    /// Cluster sizes as a sorted multiset.
    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.clusters().iter().map(|c| c.len()).collect();
        sizes.sort_unstable();
        sizes
    }
}

/// Supergraph over the input graphs: adjacency (an indicator) plus
/// symmetric nonnegative pairwise affinity scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Supergraph {
    pub adjacency: ClusterIndicator,
    pub weights: ScoreMatrix,
}

impl Supergraph {
    pub fn new(adjacency: ClusterIndicator, weights: ScoreMatrix) -> Result<Self> {
        if adjacency.n_graphs() != weights.n() {
            return Err(Error::contract("supergraph: adjacency and weights sizes differ"));
        }
        if !weights.is_symmetric() {
            return Err(Error::contract("supergraph: weights not symmetric"));
        }
        for i in 0..weights.n() {
            for j in 0..weights.n() {
                if weights.get(i, j) < 0.0 {
                    return Err(Error::contract("supergraph: negative weight"));
                }
            }
        }
        Ok(Supergraph { adjacency, weights })
    }

    pub fn n_graphs(&self) -> usize {
        self.weights.n()
    }
}

/// True iff `c_ij and c_jk` implies `c_ik` for all triples.
pub fn check_transitive(c: &ClusterIndicator) -> bool {
    let n = c.n_graphs();
    for i in 0..n {
        for j in 0..n {
            if !c.get(i, j) {
                continue;
            }
            for k in 0..n {
                if c.get(j, k) && !c.get(i, k) {
                    return false;
                }
            }
        }
    }
    true
}

/// Number of strongly connected components of the selection graph. The
/// indicator is symmetric, so these are plain connected components.
pub fn scc_count(c: &ClusterIndicator) -> usize {
    c.component_labels().iter().max().map_or(0, |&m| m + 1)
}

/// Indicator marking all intra-cluster pairs of a strict division.
pub fn division_to_indicator(d: &ClusterDivision) -> ClusterIndicator {
    let n = d.n_graphs();
    let mut c = ClusterIndicator::new(n);
    let labels = d.labels();
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] {
                c.set_pair(i, j, true);
            }
        }
    }
    c
}

/// Division formed by the connected components of the selection graph.
pub fn indicator_to_division(c: &ClusterIndicator) -> ClusterDivision {
    ClusterDivision::from_labels(c.component_labels())
        .expect("component labels are contiguous by construction")
}

fn check_weights(weights: &ScoreMatrix) -> Result<()> {
    if !weights.is_symmetric() {
        return Err(Error::contract("rank scheme: weights not symmetric"));
    }
    Ok(())
}

fn check_ratio(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::config(format!("ratio r = {r} outside (0, 1]")));
    }
    Ok(())
}

/// Unordered off-diagonal pairs sorted by weight descending, ties by
/// lexicographic pair index.
fn pairs_by_weight(weights: &ScoreMatrix) -> Vec<(usize, usize)> {
    let n = weights.n();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|&a, &b| {
        weights
            .get(b.0, b.1)
            .partial_cmp(&weights.get(a.0, a.1))
            .unwrap()
            .then(a.cmp(&b))
    });
    pairs
}

/// Budget of unordered pairs under the global constraint.
fn global_budget(n: usize, r: f64) -> usize {
    ((r * (n * n) as f64) / 2.0).floor() as usize
}

/// Neighbors of `i` sorted by weight descending, ties by index.
fn sorted_neighbors(weights: &ScoreMatrix, i: usize) -> Vec<usize> {
    let n = weights.n();
    let mut nbrs: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    nbrs.sort_by(|&a, &b| {
        weights
            .get(i, b)
            .partial_cmp(&weights.get(i, a))
            .unwrap()
            .then(a.cmp(&b))
    });
    nbrs
}

/// Top `floor(r * N^2 / 2)` unordered pairs by weight, mirrored. A budget
/// below one pair selects nothing beyond the diagonal.
pub fn global_rank_indicator(weights: &ScoreMatrix, r: f64) -> Result<ClusterIndicator> {
    check_weights(weights)?;
    check_ratio(r)?;
    let n = weights.n();
    let budget = global_budget(n, r);
    let mut c = ClusterIndicator::new(n);
    for &(i, j) in pairs_by_weight(weights).iter().take(budget) {
        c.set_pair(i, j, true);
    }
    Ok(c)
}

/// Marks each graph's `max(1, floor(r * N))` nearest neighbors, then
/// symmetrizes by union.
pub fn local_rank_indicator(weights: &ScoreMatrix, r: f64) -> Result<ClusterIndicator> {
    check_weights(weights)?;
    check_ratio(r)?;
    let n = weights.n();
    let mut c = ClusterIndicator::new(n);
    if n < 2 {
        return Ok(c);
    }
    let per_row = ((r * n as f64).floor() as usize).max(1).min(n - 1);
    for i in 0..n {
        for &j in sorted_neighbors(weights, i).iter().take(per_row) {
            c.set_pair(i, j, true);
        }
    }
    Ok(c)
}

/// Bi-level rank of each unordered pair: the sum of the two one-sided
/// neighbor ranks (1-based).
fn fuse_ranks(weights: &ScoreMatrix) -> Vec<Vec<usize>> {
    let n = weights.n();
    // one_sided[v][u]: rank of u among v's neighbors.
    let mut one_sided = vec![vec![0usize; n]; n];
    for v in 0..n {
        for (pos, &u) in sorted_neighbors(weights, v).iter().enumerate() {
            one_sided[v][u] = pos + 1;
        }
    }
    one_sided
}

/// Selects the `floor(r * N^2 / 2)` unordered pairs with the smallest
/// bi-level rank; ties prefer larger weight, then lexicographic index.
pub fn fuse_rank_indicator(weights: &ScoreMatrix, r: f64) -> Result<ClusterIndicator> {
    check_weights(weights)?;
    check_ratio(r)?;
    let n = weights.n();
    let budget = global_budget(n, r);
    let mut c = ClusterIndicator::new(n);
    for &(i, j) in fuse_ordered_pairs(weights).iter().take(budget) {
        c.set_pair(i, j, true);
    }
    Ok(c)
}

fn fuse_ordered_pairs(weights: &ScoreMatrix) -> Vec<(usize, usize)> {
    let n = weights.n();
    let one_sided = fuse_ranks(weights);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|&a, &b| {
        let ra = one_sided[a.1][a.0] + one_sided[a.0][a.1];
        let rb = one_sided[b.1][b.0] + one_sided[b.0][b.1];
        ra.cmp(&rb)
            .then(
                weights
                    .get(b.0, b.1)
                    .partial_cmp(&weights.get(a.0, a.1))
                    .unwrap(),
            )
            .then(a.cmp(&b))
    });
    pairs
}

/// Pair order induced by the local scheme: a pair enters when either
/// endpoint would first select it, i.e. at its best one-sided rank.
fn local_ordered_pairs(weights: &ScoreMatrix) -> Vec<(usize, usize)> {
    let n = weights.n();
    let one_sided = fuse_ranks(weights);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|&a, &b| {
        let ra = one_sided[a.1][a.0].min(one_sided[a.0][a.1]);
        let rb = one_sided[b.1][b.0].min(one_sided[b.0][b.1]);
        ra.cmp(&rb)
            .then(
                weights
                    .get(b.0, b.1)
                    .partial_cmp(&weights.get(a.0, a.1))
                    .unwrap(),
            )
            .then(a.cmp(&b))
    });
    pairs
}

/// Adds pairs in scheme rank order until the selection graph is connected.
pub fn auto_connect_indicator(weights: &ScoreMatrix, scheme: Scheme) -> Result<ClusterIndicator> {
    check_weights(weights)?;
    let order = match scheme {
        Scheme::Global => pairs_by_weight(weights),
        Scheme::Local => local_ordered_pairs(weights),
        Scheme::Fuse => fuse_ordered_pairs(weights),
        Scheme::Hard => {
            return Err(Error::config("auto-connect needs a ranking scheme, not hard"));
        }
    };
    let n = weights.n();
    let mut c = ClusterIndicator::new(n);
    if n <= 1 {
        return Ok(c);
    }
    for (i, j) in order {
        c.set_pair(i, j, true);
        if c.is_connected() {
            break;
        }
    }
    Ok(c)
}
