//! Affinity-score clustering: union-KNN sparsification followed by
//! normalized spectral clustering (symmetric Laplacian, Jacobi
//! eigendecomposition, seeded k-means++).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicator::{ClusterDivision, ScoreMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub eigen_tol: f64,
    pub seed: u64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            kmeans_restarts: 10,
            kmeans_max_iters: 100,
            eigen_tol: 1e-10,
            seed: 0,
        }
    }
}

impl SpectralParams {
    pub fn with_seed(seed: u64) -> Self {
        SpectralParams { seed, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.kmeans_restarts == 0 || self.kmeans_max_iters == 0 {
            return Err(Error::config("spectral: iteration counts must be positive"));
        }
        if self.eigen_tol <= 0.0 {
            return Err(Error::config("spectral: eigen_tol must be positive"));
        }
        Ok(())
    }
}

/// Zeroes every off-diagonal score unless one endpoint is among the other's
/// `k` nearest neighbors (union rule, which keeps the matrix symmetric).
/// The diagonal is zeroed. Ties prefer the lexicographically first neighbor.
pub fn knn_sparsify(weights: &ScoreMatrix, k: usize) -> Result<ScoreMatrix> {
    if !weights.is_symmetric() {
        return Err(Error::contract("knn_sparsify: weights not symmetric"));
    }
    if k == 0 {
        return Err(Error::config("knn_sparsify: k must be at least 1"));
    }
    let n = weights.n();
    let mut keep = vec![false; n * n];
    for i in 0..n {
        let mut nbrs: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        nbrs.sort_by(|&a, &b| {
            weights
                .get(i, b)
                .partial_cmp(&weights.get(i, a))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &j in nbrs.iter().take(k) {
            keep[i * n + j] = true;
            keep[j * n + i] = true;
        }
    }
    let mut out = ScoreMatrix::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if keep[i * n + j] {
                out.set_sym(i, j, weights.get(i, j));
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending with matching eigenvector columns.
pub(crate) fn jacobi_eigen(matrix: &[f64], n: usize, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let mut a = matrix.to_vec();
    // v starts as identity; columns become eigenvectors.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    (eigenvalues, eigenvectors)
}

/// Squared Euclidean distance between embedding rows.
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One seeded k-means++ run; returns (labels, inertia).
fn kmeans_once(
    rows: &[Vec<f64>],
    k: usize,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = rows.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(rows[rng.random_range(0..n)].clone());
    while centroids.len() < k {
        let d2: Vec<f64> = rows
            .iter()
            .map(|r| {
                centroids
                    .iter()
                    .map(|c| dist2(r, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(rows[next].clone());
    }

    let mut labels = vec![0usize; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for (i, r) in rows.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| dist2(r, &centroids[a]).partial_cmp(&dist2(r, &centroids[b])).unwrap())
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let dim = rows[0].len();
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> =
                rows.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
            if members.is_empty() {
                continue; // empty cluster keeps its previous centroid
            }
            for d in 0..dim {
                centroid[d] = members.iter().map(|r| r[d]).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia: f64 = rows
        .iter()
        .zip(&labels)
        .map(|(r, &l)| dist2(r, &centroids[l]))
        .sum();
    (labels, inertia)
}

/// Spectral clustering on sparsified pairwise scores.
///
/// Builds `L_sym = I - D^{-1/2} W D^{-1/2}` (zero-degree rows stay
/// isolated), embeds into the `n_clusters` smallest eigenvectors,
/// row-normalizes, and runs restarted k-means. Deterministic given the seed;
/// the best restart by (inertia, restart index) wins.
pub fn spectral_cluster(
    weights: &ScoreMatrix,
    n_clusters: usize,
    params: &SpectralParams,
) -> Result<ClusterDivision> {
    params.validate()?;
    let n = weights.n();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::config(format!(
            "spectral_cluster: n_clusters = {n_clusters} with {n} graphs"
        )));
    }
    if !weights.is_symmetric() {
        return Err(Error::contract("spectral_cluster: weights not symmetric"));
    }
    if n_clusters == 1 {
        return ClusterDivision::from_labels(vec![0; n]);
    }
    if n_clusters == n {
        return ClusterDivision::from_labels((0..n).collect());
    }

    let mut d_inv_sqrt = vec![0.0; n];
    for i in 0..n {
        let deg: f64 = (0..n).filter(|&j| j != i).map(|j| weights.get(i, j)).sum();
        if deg > 0.0 {
            d_inv_sqrt[i] = 1.0 / deg.sqrt();
        }
    }
    let mut lap = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let w = if i == j { 0.0 } else { weights.get(i, j) };
            let norm = d_inv_sqrt[i] * w * d_inv_sqrt[j];
            lap[i * n + j] = if i == j { 1.0 } else { 0.0 } - norm;
        }
    }

    let (_, vecs) = jacobi_eigen(&lap, n, params.eigen_tol);
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n_clusters).map(|c| vecs[i * n + c]).collect())
        .collect();
    for row in rows.iter_mut() {
        let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..params.kmeans_restarts {
        let (labels, inertia) = kmeans_once(&rows, n_clusters, params.kmeans_max_iters, &mut rng);
        if best.as_ref().is_none_or(|(_, bi)| inertia < *bi) {
            best = Some((labels, inertia));
        }
    }
    let (labels, _) = best.unwrap();

    // Canonical labels by first appearance; drop empty clusters.
    let mut remap = vec![usize::MAX; n_clusters];
    let mut next = 0;
    let canon: Vec<usize> = labels
        .iter()
        .map(|&l| {
            if remap[l] == usize::MAX {
                remap[l] = next;
                next += 1;
            }
            remap[l]
        })
        .collect();
    ClusterDivision::from_labels(canon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_weights() -> ScoreMatrix {
        let mut w = ScoreMatrix::new(3);
        w.set_sym(0, 1, 0.9);
        w.set_sym(0, 2, 0.5);
        w.set_sym(1, 2, 0.1);
        w
    }

    #[test]
    fn knn_keeps_union_support() {
        let w = example_weights();
        let s = knn_sparsify(&w, 1).unwrap();
        assert_eq!(s.get(0, 1), 0.9);
        assert_eq!(s.get(0, 2), 0.5); // kept because 0 is 2's nearest
        assert_eq!(s.get(1, 2), 0.0);

        // k >= N-1 changes nothing off-diagonal.
        let s = knn_sparsify(&w, 2).unwrap();
        assert_eq!(s, w);

        // Equal weights, k = 1: each row keeps its lexicographically first
        // neighbor.
        let eq = {
            let mut m = ScoreMatrix::new(3);
            for i in 0..3 {
                for j in (i + 1)..3 {
                    m.set_sym(i, j, 0.5);
                }
            }
            m
        };
        let s = knn_sparsify(&eq, 1).unwrap();
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.get(0, 2), 0.5); // row 2 keeps node 0
        assert_eq!(s.get(1, 2), 0.0);
    }

    #[test]
    fn knn_output_dominated_by_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let n = rng.random_range(2..9usize);
            let mut w = ScoreMatrix::new(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    w.set_sym(i, j, rng.random::<f64>());
                }
            }
            let k = rng.random_range(1..=n);
            let s = knn_sparsify(&w, k).unwrap();
            assert!(s.is_symmetric());
            for i in 0..n {
                assert_eq!(s.get(i, i), 0.0);
                for j in 0..n {
                    assert!(s.get(i, j) == 0.0 || s.get(i, j) == w.get(i, j));
                }
            }
        }
    }

    #[test]
    fn jacobi_reconstructs_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2usize, 5, 20, 50] {
            // Random symmetric normalized-Laplacian-like matrix.
            let mut w = ScoreMatrix::new(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_bool(0.4) {
                        w.set_sym(i, j, rng.random::<f64>());
                    }
                }
            }
            let mut d = vec![0.0; n];
            for i in 0..n {
                d[i] = (0..n).map(|j| w.get(i, j)).sum();
            }
            let mut lap = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let di = if d[i] > 0.0 { 1.0 / d[i].sqrt() } else { 0.0 };
                    let dj = if d[j] > 0.0 { 1.0 / d[j].sqrt() } else { 0.0 };
                    lap[i * n + j] =
                        if i == j { 1.0 } else { 0.0 } - di * w.get(i, j) * dj;
                }
            }
            let (vals, vecs) = jacobi_eigen(&lap, n, 1e-12);
            // Frobenius norm of V diag(vals) V^T - L.
            let mut err = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let mut rec = 0.0;
                    for k in 0..n {
                        rec += vecs[i * n + k] * vals[k] * vecs[j * n + k];
                    }
                    err += (rec - lap[i * n + j]).powi(2);
                }
            }
            assert!(err.sqrt() < 1e-8, "n={n}: reconstruction error {}", err.sqrt());
            // Eigenvalues sorted ascending.
            for k in 1..n {
                assert!(vals[k] >= vals[k - 1]);
            }
        }
    }

    #[test]
    fn recovers_disconnected_blocks() {
        // Two blocks with zero cross weights: exact recovery.
        let mut w = ScoreMatrix::new(5);
        w.set_sym(0, 1, 0.8);
        w.set_sym(0, 2, 0.6);
        w.set_sym(1, 2, 0.9);
        w.set_sym(3, 4, 0.7);
        let d = spectral_cluster(&w, 2, &SpectralParams::with_seed(0)).unwrap();
        assert_eq!(d.labels()[0], d.labels()[1]);
        assert_eq!(d.labels()[0], d.labels()[2]);
        assert_eq!(d.labels()[3], d.labels()[4]);
        assert_ne!(d.labels()[0], d.labels()[3]);
    }

    #[test]
    fn trivial_cluster_counts() {
        let w = example_weights();
        let d = spectral_cluster(&w, 1, &SpectralParams::with_seed(0)).unwrap();
        assert_eq!(d.labels(), &[0, 0, 0]);
        let d = spectral_cluster(&w, 3, &SpectralParams::with_seed(0)).unwrap();
        assert_eq!(d.labels(), &[0, 1, 2]);
        assert!(spectral_cluster(&w, 4, &SpectralParams::with_seed(0)).is_err());
    }

    #[test]
    fn planted_blocks_recovered_up_to_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 4..=20usize {
            for k in 2..=4usize {
                if k > n / 2 {
                    continue;
                }
                let gt: Vec<usize> = (0..n).map(|i| i % k).collect();
                let mut w = ScoreMatrix::new(n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        if gt[i] == gt[j] {
                            w.set_sym(i, j, 0.8 + 0.2 * rng.random::<f64>());
                        }
                    }
                }
                let d = spectral_cluster(&w, k, &SpectralParams::with_seed(7)).unwrap();
                // Same-block iff same-label.
                for i in 0..n {
                    for j in (i + 1)..n {
                        assert_eq!(
                            gt[i] == gt[j],
                            d.labels()[i] == d.labels()[j],
                            "n={n} k={k} pair ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 12;
        let mut w = ScoreMatrix::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                w.set_sym(i, j, rng.random::<f64>());
            }
        }
        let a = spectral_cluster(&w, 3, &SpectralParams::with_seed(5)).unwrap();
        let b = spectral_cluster(&w, 3, &SpectralParams::with_seed(5)).unwrap();
        assert_eq!(a, b);
    }
}
