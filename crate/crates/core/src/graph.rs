//! Keypoint graphs: 2-D node coordinates plus undirected edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A keypoint graph. Coordinates are dimensionless, on the order of the unit
/// square. Edges are stored unordered as `(a, b)` with `a < b`, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointGraph {
    pub id: String,
    pub points: Vec<[f64; 2]>,
    pub edges: Vec<(usize, usize)>,
    /// Ground-truth category tag; never consulted by the solver.
    pub class_label: Option<String>,
    /// Number of non-outlier nodes, when known.
    pub inlier_count: Option<usize>,
}

impl PointGraph {
    /// Builds a graph, canonicalizing the edge set and checking invariants.
    pub fn new(
        id: impl Into<String>,
        points: Vec<[f64; 2]>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let id = id.into();
        if points.is_empty() {
            return Err(Error::contract(format!("graph '{id}': no nodes")));
        }
        let n = points.len();
        let mut canon = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::contract(format!("graph '{id}': self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::contract(format!(
                    "graph '{id}': edge ({a},{b}) out of range for {n} nodes"
                )));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(PointGraph {
            id,
            points,
            edges: canon,
            class_label: None,
            inlier_count: None,
        })
    }

    pub fn with_class(mut self, class: impl Into<String>) -> Self {
        self.class_label = Some(class.into());
        self
    }

    pub fn with_inlier_count(mut self, count: usize) -> Result<Self> {
        if count > self.points.len() {
            return Err(Error::contract(format!(
                "graph '{}': inlier_count {} exceeds node count {}",
                self.id,
                count,
                self.points.len()
            )));
        }
        self.inlier_count = Some(count);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.points.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_edges() {
        let g = PointGraph::new(
            "g",
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![(2, 0), (0, 1), (1, 0)],
        )
        .unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn rejects_invalid() {
        assert!(PointGraph::new("g", vec![], vec![]).is_err());
        assert!(PointGraph::new("g", vec![[0.0, 0.0]], vec![(0, 0)]).is_err());
        assert!(PointGraph::new("g", vec![[0.0, 0.0]], vec![(0, 1)]).is_err());
        let g = PointGraph::new("g", vec![[0.0, 0.0], [1.0, 1.0]], vec![]).unwrap();
        assert!(g.with_inlier_count(3).is_err());
    }
}
