//! Evaluation metrics: intra-cluster matching accuracy, clustering purity,
//! Rand index, and clustering accuracy.
//!
//! The Rand index counts ordered pairs including the diagonal and divides
//! by N^2, reproducing the convention of the protocol this follows rather
//! than the textbook definition.

use crate::assignment::MatchingSet;
use crate::error::{Error, Result};
use crate::indicator::{division_to_indicator, ClusterDivision, ClusterIndicator};

/// Intra-cluster matching accuracy plus a flag for the degenerate case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingAccuracy {
    pub value: f64,
    /// False when the ground truth selects no intra-cluster pair, in which
    /// case `value` is 0 by convention.
    pub has_intra_pairs: bool,
}

/// Mean per-pair accuracy over ordered intra-cluster pairs of the ground
/// truth. Per pair, accuracy is the fraction of ground-truth inlier matches
/// reproduced; matches on outlier rows are never counted.
pub fn matching_accuracy(
    x: &MatchingSet,
    x_gt: &MatchingSet,
    c_gt: &ClusterIndicator,
) -> Result<MatchingAccuracy> {
    let n = x.n_graphs();
    if x_gt.n_graphs() != n || c_gt.n_graphs() != n {
        return Err(Error::contract("matching_accuracy: size mismatch"));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j || !c_gt.get(i, j) {
                continue;
            }
            total += x.get(i, j).agreement_with(x_gt.get(i, j));
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Ok(MatchingAccuracy { value: 0.0, has_intra_pairs: false });
    }
    Ok(MatchingAccuracy { value: total / pairs as f64, has_intra_pairs: true })
}

fn check_same_n(pred: &ClusterDivision, gt: &ClusterDivision) -> Result<usize> {
    let n = pred.n_graphs();
    if gt.n_graphs() != n {
        return Err(Error::contract("clustering metric: graph counts differ"));
    }
    Ok(n)
}

/// Contingency counts: `table[p][g]` = |pred cluster p \cap gt cluster g|.
fn contingency(pred: &ClusterDivision, gt: &ClusterDivision) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; gt.n_clusters()]; pred.n_clusters()];
    for (p, g) in pred.labels().iter().zip(gt.labels()) {
        table[*p][*g] += 1;
    }
    table
}

/// Fraction of graphs covered by the best ground-truth cluster of each
/// predicted cluster.
pub fn clustering_purity(pred: &ClusterDivision, gt: &ClusterDivision) -> Result<f64> {
    let n = check_same_n(pred, gt)?;
    let table = contingency(pred, gt);
    let hits: usize = table.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / n as f64)
}

/// Agreeing ordered pairs (same-same plus different-different) over N^2,
/// diagonal included.
pub fn rand_index(pred: &ClusterDivision, gt: &ClusterDivision) -> Result<f64> {
    let n = check_same_n(pred, gt)?;
    let (pl, gl) = (pred.labels(), gt.labels());
    let mut agree = 0usize;
    for i in 0..n {
        for j in 0..n {
            let same_pred = pl[i] == pl[j];
            let same_gt = gl[i] == gl[j];
            if same_pred == same_gt {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * n) as f64)
}

/// Clustering accuracy: one minus the mean of a split penalty (ground-truth
/// clusters scattered over predictions) and a merge penalty (predicted
/// clusters spanning ground-truth clusters), both summed over ordered
/// distinct cluster pairs.
pub fn clustering_accuracy(pred: &ClusterDivision, gt: &ClusterDivision) -> Result<f64> {
    check_same_n(pred, gt)?;
    let table = contingency(pred, gt);
    let n_pred = pred.n_clusters();
    let n_gt = gt.n_clusters();
    let gt_sizes: Vec<usize> = gt.clusters().iter().map(|c| c.len()).collect();

    let mut split = 0.0;
    for g in 0..n_gt {
        let size = gt_sizes[g] as f64;
        for pa in 0..n_pred {
            for pb in 0..n_pred {
                if pa == pb {
                    continue;
                }
                split += (table[pa][g] * table[pb][g]) as f64 / (size * size);
            }
        }
    }
    let mut merge = 0.0;
    for p in 0..n_pred {
        for ga in 0..n_gt {
            for gb in 0..n_gt {
                if ga == gb {
                    continue;
                }
                merge += (table[p][ga] * table[p][gb]) as f64
                    / (gt_sizes[ga] as f64 * gt_sizes[gb] as f64);
            }
        }
    }
    Ok(1.0 - (split + merge) / n_gt as f64)
}

/// Ground-truth indicator of a division, for metric calls.
pub fn gt_indicator(gt: &ClusterDivision) -> ClusterIndicator {
    division_to_indicator(gt)
}
