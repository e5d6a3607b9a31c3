//! Synthetic mixture benchmark: per class, a random prototype point set;
//! per graph, a deformed copy with appended outliers under a recorded node
//! permutation, triangulated by Delaunay.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::assignment::{Assignment, MatchingSet};
use crate::delaunay::delaunay;
use crate::error::{Error, Result};
use crate::graph::PointGraph;
use crate::indicator::ClusterDivision;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_classes: usize,
    /// One entry per class; a single entry applies to every class.
    pub graphs_per_class: Vec<usize>,
    /// Prototype nodes per class.
    pub n_inliers: usize,
    /// Uniform-random extra nodes per graph.
    pub n_outliers: usize,
    /// Std of the Gaussian coordinate noise, in unit-square units.
    pub deform_sigma: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Balanced setting: `n_classes` classes of `graphs_per_class` graphs.
    pub fn balanced(n_classes: usize, graphs_per_class: usize) -> Self {
        SynthConfig {
            n_classes,
            graphs_per_class: vec![graphs_per_class],
            n_inliers: 10,
            n_outliers: 0,
            deform_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.n_inliers == 0 {
            return Err(Error::config("synth: class and inlier counts must be positive"));
        }
        if self.graphs_per_class.is_empty()
            || (self.graphs_per_class.len() != 1 && self.graphs_per_class.len() != self.n_classes)
        {
            return Err(Error::config(
                "synth: graphs_per_class must have one entry or one per class",
            ));
        }
        if self.graphs_per_class.contains(&0) {
            return Err(Error::config("synth: every class needs at least one graph"));
        }
        if self.deform_sigma.is_nan() || self.deform_sigma < 0.0 {
            return Err(Error::config("synth: deform_sigma must be nonnegative"));
        }
        Ok(())
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        if self.graphs_per_class.len() == 1 {
            vec![self.graphs_per_class[0]; self.n_classes]
        } else {
            self.graphs_per_class.clone()
        }
    }
}

/// A generated dataset with its planted ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub graphs: Vec<PointGraph>,
    /// Per graph, per node: prototype keypoint id, `None` for outliers.
    pub node_labels: Vec<Vec<Option<usize>>>,
    pub gt_matchings: MatchingSet,
    pub gt_division: ClusterDivision,
}

/// Deterministic generation from the config seed.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.deform_sigma)
        .map_err(|e| Error::config(format!("synth: bad deform_sigma: {e}")))?;

    let mut graphs = Vec::new();
    let mut node_labels: Vec<Vec<Option<usize>>> = Vec::new();
    let mut division = Vec::new();
    for (class, &n_graphs) in cfg.class_sizes().iter().enumerate() {
        let prototype: Vec<[f64; 2]> = (0..cfg.n_inliers)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        for g in 0..n_graphs {
            let m = cfg.n_inliers + cfg.n_outliers;
            let mut staged: Vec<([f64; 2], Option<usize>)> = prototype
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let q = [p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng)];
                    (q, Some(k))
                })
                .collect();
            for _ in 0..cfg.n_outliers {
                staged.push(([rng.random::<f64>(), rng.random::<f64>()], None));
            }
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rng);
            let mut points = vec![[0.0, 0.0]; m];
            let mut labels = vec![None; m];
            for (from, &to) in perm.iter().enumerate() {
                points[to] = staged[from].0;
                labels[to] = staged[from].1;
            }
            let edges = delaunay(&points)?;
            let graph = PointGraph::new(format!("c{class}_g{g}"), points, edges)?
                .with_class(class.to_string())
                .with_inlier_count(cfg.n_inliers)?;
            graphs.push(graph);
            node_labels.push(labels);
            division.push(class);
        }
    }

    let gt_division = ClusterDivision::from_labels(division)?;
    let gt_matchings = matchings_from_labels(&graphs, &node_labels)?;
    Ok(SynthOutput { graphs, node_labels, gt_matchings, gt_division })
}

/// Planted matchings implied by per-node keypoint labels: nodes match iff
/// they carry the same label and their graphs share a class.
pub fn matchings_from_labels(
    graphs: &[PointGraph],
    node_labels: &[Vec<Option<usize>>],
) -> Result<MatchingSet> {
    if graphs.len() != node_labels.len() {
        return Err(Error::contract("matchings_from_labels: length mismatch"));
    }
    let counts: Vec<usize> = graphs.iter().map(|g| g.n_nodes()).collect();
    let mut set = MatchingSet::new(&counts);
    for i in 0..graphs.len() {
        for j in (i + 1)..graphs.len() {
            if graphs[i].class_label.is_none() || graphs[i].class_label != graphs[j].class_label {
                continue;
            }
            let mut pairs = Vec::new();
            for (r, lab) in node_labels[i].iter().enumerate() {
                if let Some(l) = lab {
                    if let Some(c) = node_labels[j].iter().position(|x| x.as_ref() == Some(l)) {
                        pairs.push((r, c));
                    }
                }
            }
            set.set_pair(i, j, Assignment::from_pairs(counts[i], counts[j], &pairs)?)?;
        }
    }
    Ok(set)
}
