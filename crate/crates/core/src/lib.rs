//! Learning-free joint graph matching and clustering over mixtures of
//! graph categories.
//!
//! Given a set of keypoint graphs drawn from several unknown categories,
//! the solver matches every pair, then alternates between two steps with a
//! monotone joint objective: select a relaxed cluster indicator from the
//! current pairwise affinity scores (global, local, or fused ranking, or a
//! strict clustering for the hard baseline), and improve matchings by
//! composing them along paths of the induced supergraph. A final KNN
//! sparsification plus spectral clustering pass emits the cluster division.
//!
//! Entry points:
//! - [`solver::m3c_solve`] runs the full pipeline on a slice of
//!   [`PointGraph`]s.
//! - [`synth::synth_generate`] builds seeded synthetic mixtures with
//!   planted ground truth.
//! - [`experiment`] orchestrates repeated runs and metric evaluation;
//!   [`dataset`] reads and writes the JSON dataset format.

pub mod affinity;
pub mod assignment;
pub mod clustering;
pub mod config;
pub mod dataset;
pub mod delaunay;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod indicator;
pub mod metrics;
pub mod pairwise;
pub mod solver;
pub mod synth;

pub use affinity::{affinity_score, build_raw_affinity, fuse_affinity, AffinityMatrix, EdgeFeature};
pub use assignment::{Assignment, MatchingSet};
pub use config::{RMode, Scheme, SolverConfig};
pub use error::{Error, Result};
pub use graph::PointGraph;
pub use indicator::{ClusterDivision, ClusterIndicator, ScoreMatrix, Supergraph};
pub use pairwise::RrwmParams;
pub use solver::{m3c_solve, PairwiseAffinities, RunTrace, SolveResult};
pub use synth::{synth_generate, SynthConfig};
