//! Two-graph matching: reweighted random-walk soft solver plus Hungarian
//! discretization. Used to initialize the multi-graph loop.

use serde::{Deserialize, Serialize};

use crate::affinity::AffinityMatrix;
use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::graph::PointGraph;

/// Reweighted random-walk parameters; defaults follow the original
/// method's usual values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrwmParams {
    /// Reweight-jump mixing weight, in (0, 1).
    pub jump_prob: f64,
    /// Exponentiation sharpness of the reweighting step.
    pub inflation: f64,
    pub sinkhorn_iters: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for RrwmParams {
    fn default() -> Self {
        RrwmParams {
            jump_prob: 0.2,
            inflation: 10.0,
            sinkhorn_iters: 10,
            tol: 1e-6,
            max_iters: 300,
        }
    }
}

impl RrwmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.jump_prob > 0.0 && self.jump_prob < 1.0) {
            return Err(Error::config("rrwm: jump_prob outside (0, 1)"));
        }
        if self.inflation <= 0.0 {
            return Err(Error::config("rrwm: inflation must be positive"));
        }
        if self.sinkhorn_iters == 0 || self.max_iters == 0 {
            return Err(Error::config("rrwm: iteration counts must be positive"));
        }
        if self.tol <= 0.0 {
            return Err(Error::config("rrwm: tol must be positive"));
        }
        Ok(())
    }
}

/// Soft matching distribution over node pairs, row-major `n_i x n_j`.
/// Total mass is 1 after the final normalization.
pub fn rrwm(k: &AffinityMatrix, params: &RrwmParams) -> Result<Vec<f64>> {
    params.validate()?;
    let (n_i, n_j) = (k.n_i(), k.n_j());
    let len = n_i * n_j;
    if len == 0 {
        return Err(Error::contract("rrwm: empty shape"));
    }
    // Uniform start keeps the solver deterministic.
    let mut x = vec![1.0 / len as f64; len];
    let mut y = vec![0.0; len];
    let mut prev = vec![0.0; len];
    for _ in 0..params.max_iters {
        prev.copy_from_slice(&x);
        propagate(k, &x, &mut y);

        let max = y.iter().copied().fold(0.0f64, f64::max);
        if max > 0.0 {
            for v in y.iter_mut() {
                *v = (params.inflation * *v / max).exp();
            }
        } else {
            y.fill(1.0);
        }

        sinkhorn(&mut y, n_i, n_j, params.sinkhorn_iters);

        let mut total = 0.0;
        for (xv, &yv) in x.iter_mut().zip(y.iter()) {
            *xv = params.jump_prob * yv + (1.0 - params.jump_prob) * *xv;
            total += *xv;
        }
        if total > 0.0 {
            for xv in x.iter_mut() {
                *xv /= total;
            }
        }
        let diff: f64 = x.iter().zip(prev.iter()).map(|(a, b)| (a - b).abs()).sum();
        if diff < params.tol {
            break;
        }
    }
    Ok(x)
}

/// One multiplication of the factored Lawler matrix with a flattened soft
/// assignment: node block on the diagonal plus all four orientation
/// combinations of every stored edge pair.
fn propagate(k: &AffinityMatrix, x: &[f64], y: &mut [f64]) {
    let n_j = k.n_j();
    for (idx, yv) in y.iter_mut().enumerate() {
        let r = idx / n_j;
        let c = idx % n_j;
        *yv = k.node(r, c) * x[idx];
    }
    let edges_i = k.edges_i();
    let edges_j = k.edges_j();
    for (ei, &(a, b)) in edges_i.iter().enumerate() {
        for (ej, &(c, d)) in edges_j.iter().enumerate() {
            let w = k.edge_value(ei, ej);
            if w == 0.0 {
                continue;
            }
            y[a * n_j + c] += w * x[b * n_j + d];
            y[b * n_j + d] += w * x[a * n_j + c];
            y[a * n_j + d] += w * x[b * n_j + c];
            y[b * n_j + c] += w * x[a * n_j + d];
        }
    }
}

/// Alternating row/column normalization in place.
fn sinkhorn(m: &mut [f64], n_i: usize, n_j: usize, iters: usize) {
    for _ in 0..iters {
        for r in 0..n_i {
            let row = &mut m[r * n_j..(r + 1) * n_j];
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                for v in row.iter_mut() {
                    *v /= s;
                }
            }
        }
        for c in 0..n_j {
            let mut s = 0.0;
            for r in 0..n_i {
                s += m[r * n_j + c];
            }
            if s > 0.0 {
                for r in 0..n_i {
                    m[r * n_j + c] /= s;
                }
            }
        }
    }
}

/// Maximum-score linear assignment of size `min(n_i, n_j)`.
///
/// Exact O(n^3) primal-dual solver on the zero-padded square matrix;
/// leftover rows are filled with zero-score matches so the result always
/// has full cardinality.
pub fn hungarian(score: &[f64], n_i: usize, n_j: usize) -> Result<Assignment> {
    if score.len() != n_i * n_j {
        return Err(Error::contract(format!(
            "hungarian: expected {}x{} = {} entries, got {}",
            n_i,
            n_j,
            n_i * n_j,
            score.len()
        )));
    }
    if score.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("hungarian: non-finite score entry"));
    }
    let n = n_i.max(n_j);
    if n == 0 {
        return Ok(Assignment::empty(0, 0));
    }
    // Minimize negated scores over the padded square matrix.
    let cost = |r: usize, c: usize| -> f64 {
        if r < n_i && c < n_j {
            -score[r * n_j + c]
        } else {
            0.0
        }
    };

    // Shortest augmenting path method with potentials; 1-based with a
    // virtual column 0.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::with_capacity(n_i.min(n_j));
    for j in 1..=n {
        let r = col_row[j];
        if r >= 1 && r <= n_i && j <= n_j {
            pairs.push((r - 1, j - 1));
        }
    }
    // Real rows matched to padding (possible only by zero-score ties):
    // fill greedily so the cardinality is exactly min(n_i, n_j).
    let mut row_used = vec![false; n_i];
    let mut col_used = vec![false; n_j];
    for &(r, c) in &pairs {
        row_used[r] = true;
        col_used[c] = true;
    }
    let mut free_cols = (0..n_j).filter(|&c| !col_used[c]);
    for r in 0..n_i {
        if pairs.len() == n_i.min(n_j) {
            break;
        }
        if !row_used[r] {
            if let Some(c) = free_cols.next() {
                pairs.push((r, c));
            }
        }
    }
    pairs.sort_unstable();
    Assignment::from_pairs(n_i, n_j, &pairs)
}

/// Initial matching for one graph pair: RRWM followed by discretization.
pub fn solve_pairwise(
    g_i: &PointGraph,
    g_j: &PointGraph,
    k: &AffinityMatrix,
    params: &RrwmParams,
) -> Result<Assignment> {
    if k.n_i() != g_i.n_nodes() || k.n_j() != g_j.n_nodes() {
        return Err(Error::contract("solve_pairwise: affinity shape does not match graphs"));
    }
    let soft = rrwm(k, params)?;
    hungarian(&soft, k.n_i(), k.n_j())
}
