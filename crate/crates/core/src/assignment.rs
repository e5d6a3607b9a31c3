//! Partial permutations and the symmetric family of pairwise matchings.
//!
//! An [`Assignment`] is a partial injective map from the nodes of one graph
//! to the nodes of another (row and column sums at most one). Matchings are
//! stored sparsely as row -> column maps; unmatched nodes are simply absent.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partial permutation between an `rows`-node graph and a `cols`-node graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    rows: usize,
    cols: usize,
    matches: BTreeMap<usize, usize>,
}

impl Assignment {
    /// Empty matching of the given shape.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Assignment {
            rows,
            cols,
            matches: BTreeMap::new(),
        }
    }

    /// Identity matching on `n` nodes.
    pub fn identity(n: usize) -> Self {
        Assignment {
            rows: n,
            cols: n,
            matches: (0..n).map(|i| (i, i)).collect(),
        }
    }

    /// Builds an assignment from (row, col) pairs, checking validity.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let a = Self::from_pairs_unchecked(rows, cols, pairs);
        if !a.is_valid() {
            return Err(Error::contract(format!(
                "invalid assignment: pairs {pairs:?} do not form a partial permutation of {rows}x{cols}"
            )));
        }
        Ok(a)
    }

    /// Builds without validity checks; pair it with [`Assignment::is_valid`].
    pub fn from_pairs_unchecked(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Self {
        Assignment {
            rows,
            cols,
            matches: pairs.iter().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of matched node pairs.
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// Column matched to `row`, if any.
    pub fn get(&self, row: usize) -> Option<usize> {
        self.matches.get(&row).copied()
    }

    /// Matched pairs in increasing row order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.matches.iter().map(|(&r, &c)| (r, c))
    }

    /// Checks the partial-permutation invariants: indices in range, each row
    /// mapped at most once (structural) and each column hit at most once.
    pub fn is_valid(&self) -> bool {
        let mut used_cols = vec![false; self.cols];
        for (&r, &c) in &self.matches {
            if r >= self.rows || c >= self.cols {
                return false;
            }
            if used_cols[c] {
                return false;
            }
            used_cols[c] = true;
        }
        true
    }

    /// Chains two matchings: the result maps `r -> c` iff `self` maps
    /// `r -> m` and `other` maps `m -> c`.
    pub fn compose(&self, other: &Assignment) -> Result<Assignment> {
        if self.cols != other.rows {
            return Err(Error::contract(format!(
                "compose: inner dimensions differ ({}x{} vs {}x{})",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let matches = self
            .matches
            .iter()
            .filter_map(|(&r, &m)| other.get(m).map(|c| (r, c)))
            .collect();
        Ok(Assignment {
            rows: self.rows,
            cols: other.cols,
            matches,
        })
    }

    /// Swaps the roles of the two graphs.
    pub fn transpose(&self) -> Assignment {
        Assignment {
            rows: self.cols,
            cols: self.rows,
            matches: self.matches.iter().map(|(&r, &c)| (c, r)).collect(),
        }
    }

    /// Fraction of `reference` pairs reproduced by `self`. Rows unmatched in
    /// `reference` are ignored; an empty reference yields 0.
    pub fn agreement_with(&self, reference: &Assignment) -> f64 {
        if reference.is_empty() {
            return 0.0;
        }
        let hits = reference
            .pairs()
            .filter(|&(r, c)| self.get(r) == Some(c))
            .count();
        hits as f64 / reference.len() as f64
    }
}

/// The symmetric family of pairwise matchings over `n_graphs` graphs.
///
/// The entry for `(j, i)` is always the transpose of the entry for `(i, j)`;
/// diagonal entries are identities. Updates go through [`MatchingSet::set_pair`],
/// which maintains the mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingSet {
    node_counts: Vec<usize>,
    pairs: Vec<Assignment>,
}

impl MatchingSet {
    /// Family with empty off-diagonal matchings and identity diagonals.
    pub fn new(node_counts: &[usize]) -> Self {
        let n = node_counts.len();
        let mut pairs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    pairs.push(Assignment::identity(node_counts[i]));
                } else {
                    pairs.push(Assignment::empty(node_counts[i], node_counts[j]));
                }
            }
        }
        MatchingSet { node_counts: node_counts.to_vec(), pairs }
    }

    pub fn n_graphs(&self) -> usize {
        self.node_counts.len()
    }

    pub fn node_counts(&self) -> &[usize] {
        &self.node_counts
    }

    pub fn get(&self, i: usize, j: usize) -> &Assignment {
        &self.pairs[i * self.n_graphs() + j]
    }

    /// Stores `x` as the matching for `(i, j)` and its transpose for `(j, i)`.
    pub fn set_pair(&mut self, i: usize, j: usize, x: Assignment) -> Result<()> {
        if i == j {
            return Err(Error::contract("set_pair: diagonal entries are fixed identities"));
        }
        if x.rows() != self.node_counts[i] || x.cols() != self.node_counts[j] {
            return Err(Error::contract(format!(
                "set_pair({i},{j}): shape {}x{} does not match graphs ({} and {} nodes)",
                x.rows(),
                x.cols(),
                self.node_counts[i],
                self.node_counts[j]
            )));
        }
        let n = self.n_graphs();
        self.pairs[j * n + i] = x.transpose();
        self.pairs[i * n + j] = x;
        Ok(())
    }

    /// Checks validity of every entry plus the transpose-symmetry invariant.
    pub fn is_consistent(&self) -> bool {
        let n = self.n_graphs();
        for i in 0..n {
            for j in 0..n {
                let x = self.get(i, j);
                if !x.is_valid() {
                    return false;
                }
                if x.transpose() != *self.get(j, i) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asg(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Assignment {
        Assignment::from_pairs(rows, cols, pairs).unwrap()
    }

    #[test]
    fn compose_identity_is_identity() {
        let id = Assignment::identity(3);
        assert_eq!(id.compose(&id).unwrap(), id);
    }

    #[test]
    fn compose_with_inverse_gives_identity() {
        let p = asg(3, 3, &[(0, 2), (1, 0), (2, 1)]);
        let p_inv = p.transpose();
        assert_eq!(p.compose(&p_inv).unwrap(), Assignment::identity(3));
    }

    #[test]
    fn compose_partial_follows_boolean_product() {
        // {0->1} (2x3) composed with {1->2, 0->0} (3x3) maps 0 -> 2.
        let a = asg(2, 3, &[(0, 1)]);
        let b = asg(3, 3, &[(1, 2), (0, 0)]);
        let c = a.compose(&b).unwrap();
        assert_eq!(c.pairs().collect::<Vec<_>>(), vec![(0, 2)]);
        assert_eq!((c.rows(), c.cols()), (2, 3));
    }

    #[test]
    fn compose_dimension_mismatch_is_error() {
        let a = asg(2, 3, &[(0, 1)]);
        let b = asg(2, 2, &[(0, 0)]);
        assert!(a.compose(&b).is_err());
    }

    #[test]
    fn transpose_examples() {
        assert_eq!(Assignment::identity(4).transpose(), Assignment::identity(4));
        let swap = asg(2, 2, &[(0, 1), (1, 0)]);
        assert_eq!(swap.transpose(), swap);
        let partial = asg(2, 3, &[(0, 2)]);
        let t = partial.transpose();
        assert_eq!((t.rows(), t.cols()), (3, 2));
        assert_eq!(t.pairs().collect::<Vec<_>>(), vec![(2, 0)]);
    }

    #[test]
    fn validate_examples() {
        assert!(Assignment::identity(2).is_valid());
        // Column 1 used twice.
        let bad = Assignment::from_pairs_unchecked(2, 2, &[(0, 1), (1, 1)]);
        assert!(!bad.is_valid());
        assert!(Assignment::empty(0, 0).is_valid());
        // Out-of-range column.
        let oob = Assignment::from_pairs_unchecked(2, 2, &[(0, 5)]);
        assert!(!oob.is_valid());
    }

    /// Every valid assignment with n <= 3 on each side, by brute force.
    fn all_assignments(rows: usize, cols: usize) -> Vec<Assignment> {
        let mut out = vec![Assignment::empty(rows, cols)];
        for r in 0..rows {
            let mut next = Vec::new();
            for a in &out {
                next.push(a.clone());
                for c in 0..cols {
                    if a.pairs().all(|(_, c2)| c2 != c) {
                        let mut pairs: Vec<_> = a.pairs().collect();
                        pairs.push((r, c));
                        next.push(Assignment::from_pairs_unchecked(rows, cols, &pairs));
                    }
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn composition_closure_exhaustive_small() {
        // Closure under composition, checked for all shapes up to 3.
        for ri in 1..=3 {
            for k in 1..=3 {
                for cj in 1..=3 {
                    for a in all_assignments(ri, k) {
                        for b in all_assignments(k, cj) {
                            let c = a.compose(&b).unwrap();
                            assert!(c.is_valid(), "compose({a:?}, {b:?}) = {c:?} invalid");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn compose_identity_left_right_and_transpose_involution() {
        for a in all_assignments(3, 2) {
            let left = Assignment::identity(3).compose(&a).unwrap();
            let right = a.compose(&Assignment::identity(2)).unwrap();
            assert_eq!(left, a);
            assert_eq!(right, a);
            assert_eq!(a.transpose().transpose(), a);
        }
    }

    #[test]
    fn matching_set_maintains_symmetry() {
        let mut set = MatchingSet::new(&[2, 3, 2]);
        set.set_pair(0, 1, asg(2, 3, &[(0, 1), (1, 2)])).unwrap();
        assert_eq!(set.get(1, 0), &asg(3, 2, &[(1, 0), (2, 1)]));
        assert!(set.is_consistent());
        assert!(set.set_pair(0, 1, asg(3, 3, &[])).is_err());
        assert!(set.set_pair(1, 1, asg(3, 3, &[])).is_err());
    }
}
