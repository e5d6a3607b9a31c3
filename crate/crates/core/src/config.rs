//! Solver configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairwise::RrwmParams;

/// Surrogate construction scheme for the cluster indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Strict clustering per iteration (KNN sparsify + spectral clustering).
    Hard,
    /// Top pairs by affinity under a global budget.
    Global,
    /// Per-graph nearest neighbors, symmetrized by union.
    Local,
    /// Bi-level ranking combining both views.
    Fuse,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scheme::Hard => "hard",
            Scheme::Global => "global",
            Scheme::Local => "local",
            Scheme::Fuse => "fuse",
        };
        f.write_str(s)
    }
}

/// Pair-selection ratio: a fixed value of `r`, or connect-until.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RMode {
    Fixed(f64),
    /// Add pairs in rank order until the supergraph is connected.
    Auto,
}

/// Full configuration of the joint matching-and-clustering solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub r_mode: RMode,
    pub max_iters: usize,
    pub n_clusters: usize,
    /// Neighbor count for affinity sparsification before clustering.
    pub knn_k: usize,
    /// Edge-feature weight in the hand-crafted affinity.
    pub beta: f64,
    /// Scale of the hand-crafted affinity.
    pub sigma_sq: f64,
    /// Weight of the second affinity in fusion.
    pub alpha: f64,
    pub seed: u64,
    /// Composition passes per surrogate-maximization step.
    pub floyd_sweeps: usize,
    #[serde(default)]
    pub rrwm: RrwmParams,
}

impl SolverConfig {
    /// Defaults for a run with `n_clusters` clusters: fuse scheme,
    /// connect-until ratio, at most 10 iterations with early stopping.
    pub fn new(n_clusters: usize) -> Self {
        SolverConfig {
            scheme: Scheme::Fuse,
            r_mode: RMode::Auto,
            max_iters: 10,
            n_clusters,
            knn_k: 10,
            beta: 0.9,
            sigma_sq: 0.03,
            alpha: 1.0,
            seed: 0,
            floyd_sweeps: 2,
            rrwm: RrwmParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let RMode::Fixed(r) = self.r_mode {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::config(format!("r = {r} outside (0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config(format!("beta = {} outside [0, 1]", self.beta)));
        }
        if self.sigma_sq <= 0.0 {
            return Err(Error::config("sigma_sq must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if self.knn_k == 0 {
            return Err(Error::config("knn_k must be at least 1"));
        }
        if self.n_clusters == 0 {
            return Err(Error::config("n_clusters must be at least 1"));
        }
        if self.floyd_sweeps == 0 {
            return Err(Error::config("floyd_sweeps must be at least 1"));
        }
        self.rrwm.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_ranges() {
        let mut cfg = SolverConfig::new(3);
        assert!(cfg.validate().is_ok());
        cfg.r_mode = RMode::Fixed(0.0);
        assert!(cfg.validate().is_err());
        cfg.r_mode = RMode::Fixed(0.5);
        cfg.beta = 1.5;
        assert!(cfg.validate().is_err());
        cfg.beta = 0.9;
        cfg.sigma_sq = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let cfg = SolverConfig::new(3);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SolverConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        // r_mode serializes compactly.
        assert!(json.contains("\"auto\""));
    }
}
