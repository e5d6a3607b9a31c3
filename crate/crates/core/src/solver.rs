//! The joint matching-and-clustering loop: surrogate construction over a
//! relaxed indicator, Floyd-style maximization by matching composition on
//! the induced supergraph, and the final clustering pass.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::affinity::{build_raw_affinity, AffinityMatrix};
use crate::assignment::MatchingSet;
use crate::clustering::{knn_sparsify, spectral_cluster, SpectralParams};
use crate::config::{RMode, Scheme, SolverConfig};
use crate::error::{Error, Result};
use crate::graph::PointGraph;
use crate::indicator::{
    auto_connect_indicator, division_to_indicator, fuse_rank_indicator, global_rank_indicator,
    local_rank_indicator, ClusterDivision, ClusterIndicator, ScoreMatrix, Supergraph,
};
use crate::pairwise::{solve_pairwise, RrwmParams};

/// Minimum score gain for replacing a matching; prevents tie cycling.
const IMPROVE_EPS: f64 = 1e-9;

/// Affinities for every ordered graph pair; the lower triangle holds
/// transposed copies of the upper so scoring never needs to re-orient.
#[derive(Debug, Clone)]
pub struct PairwiseAffinities {
    n: usize,
    node_counts: Vec<usize>,
    mats: Vec<Option<AffinityMatrix>>,
}

impl PairwiseAffinities {
    /// Hand-crafted geometric affinities for all pairs.
    pub fn build_raw(graphs: &[PointGraph], beta: f64, sigma_sq: f64) -> Result<Self> {
        let n = graphs.len();
        let mut mats = vec![None; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let k = build_raw_affinity(&graphs[i], &graphs[j], beta, sigma_sq)?;
                mats[j * n + i] = Some(k.transposed());
                mats[i * n + j] = Some(k);
            }
        }
        Ok(PairwiseAffinities {
            n,
            node_counts: graphs.iter().map(|g| g.n_nodes()).collect(),
            mats,
        })
    }

    /// Builds from explicit upper-triangle affinities (row-major order
    /// `(0,1), (0,2), ..., (n-2,n-1)`); mirrors are derived.
    pub fn from_upper(node_counts: Vec<usize>, upper: Vec<AffinityMatrix>) -> Result<Self> {
        let n = node_counts.len();
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::contract("from_upper: wrong number of affinity matrices"));
        }
        let mut mats = vec![None; n * n];
        let mut it = upper.into_iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let k = it.next().unwrap();
                if k.n_i() != node_counts[i] || k.n_j() != node_counts[j] {
                    return Err(Error::contract(format!(
                        "from_upper: affinity for ({i},{j}) has shape {}x{}",
                        k.n_i(),
                        k.n_j()
                    )));
                }
                mats[j * n + i] = Some(k.transposed());
                mats[i * n + j] = Some(k);
            }
        }
        Ok(PairwiseAffinities { n, node_counts, mats })
    }

    pub fn n_graphs(&self) -> usize {
        self.n
    }

    pub fn node_counts(&self) -> &[usize] {
        &self.node_counts
    }

    pub fn get(&self, i: usize, j: usize) -> &AffinityMatrix {
        self.mats[i * self.n + j]
            .as_ref()
            .expect("off-diagonal affinity must exist")
    }

    /// Pairwise affinity score normalized by the smaller node count, for
    /// cross-pair comparability.
    pub fn normalized_score(&self, i: usize, j: usize, x: &crate::assignment::Assignment) -> f64 {
        let raw = self.get(i, j).score_unchecked(x);
        raw / self.node_counts[i].min(self.node_counts[j]) as f64
    }
}

/// Per-iteration convergence record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub objective: f64,
    /// Ordered count of indicator entries changed since the previous
    /// iteration; the first iteration counts edges added over the diagonal.
    pub structure_change: usize,
    pub wall_time_s: f64,
}

/// Objective, structure-change, and timing trace of one solver run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    pub iterations: Vec<IterationRecord>,
}

impl RunTrace {
    /// True when the objective sequence never decreases beyond `tol`.
    pub fn is_monotonic(&self, tol: f64) -> bool {
        self.iterations
            .windows(2)
            .all(|w| w[1].objective >= w[0].objective - tol)
    }

    /// True when the structure stops changing at or before `within` iterations.
    pub fn structure_converged_within(&self, within: usize) -> bool {
        self.iterations
            .iter()
            .take(within)
            .any(|r| r.structure_change == 0)
    }
}

/// Result of a full solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub matchings: MatchingSet,
    pub division: ClusterDivision,
    pub trace: RunTrace,
}

/// Normalized pairwise scores of the current matchings.
pub fn score_matrix(x: &MatchingSet, ks: &PairwiseAffinities) -> ScoreMatrix {
    let n = x.n_graphs();
    let mut j_mat = ScoreMatrix::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            j_mat.set_sym(i, j, ks.normalized_score(i, j, x.get(i, j)));
        }
    }
    j_mat
}

/// The joint objective: mean normalized affinity over selected pairs,
/// diagonal excluded. Zero selected pairs yield 0.
pub fn joint_objective(
    x: &MatchingSet,
    c: &ClusterIndicator,
    ks: &PairwiseAffinities,
) -> Result<f64> {
    let n = x.n_graphs();
    if c.n_graphs() != n || ks.n_graphs() != n {
        return Err(Error::contract("joint_objective: size mismatch"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && c.get(i, j) {
                total += ks.normalized_score(i, j, x.get(i, j));
                count += 1;
            }
        }
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(total / count as f64)
}

/// Initial matchings from the two-graph solver, one call per unordered pair.
pub fn initialize_matchings(
    graphs: &[PointGraph],
    ks: &PairwiseAffinities,
    params: &RrwmParams,
) -> Result<MatchingSet> {
    if graphs.len() < 2 {
        return Err(Error::config("initialize_matchings: need at least 2 graphs"));
    }
    let mut x = MatchingSet::new(ks.node_counts());
    for i in 0..graphs.len() {
        for j in (i + 1)..graphs.len() {
            let a = solve_pairwise(&graphs[i], &graphs[j], ks.get(i, j), params)?;
            x.set_pair(i, j, a)?;
        }
    }
    Ok(x)
}

/// Relaxed (or hard) indicator for the current matchings.
pub fn construct_surrogate(
    x: &MatchingSet,
    ks: &PairwiseAffinities,
    cfg: &SolverConfig,
) -> Result<ClusterIndicator> {
    surrogate_from_scores(&score_matrix(x, ks), cfg)
}

fn surrogate_from_scores(weights: &ScoreMatrix, cfg: &SolverConfig) -> Result<ClusterIndicator> {
    match cfg.scheme {
        Scheme::Hard => {
            let sparse = knn_sparsify(weights, cfg.knn_k)?;
            let division =
                spectral_cluster(&sparse, cfg.n_clusters, &SpectralParams::with_seed(cfg.seed))?;
            Ok(division_to_indicator(&division))
        }
        scheme => match cfg.r_mode {
            RMode::Auto => auto_connect_indicator(weights, scheme),
            RMode::Fixed(r) => match scheme {
                Scheme::Global => global_rank_indicator(weights, r),
                Scheme::Local => local_rank_indicator(weights, r),
                Scheme::Fuse => fuse_rank_indicator(weights, r),
                Scheme::Hard => unreachable!(),
            },
        },
    }
}

/// One iteration's supergraph: the surrogate indicator as adjacency plus
/// the current pairwise scores as edge weights.
pub fn build_supergraph(
    x: &MatchingSet,
    ks: &PairwiseAffinities,
    cfg: &SolverConfig,
) -> Result<Supergraph> {
    let weights = score_matrix(x, ks);
    let adjacency = surrogate_from_scores(&weights, cfg)?;
    Supergraph::new(adjacency, weights)
}

/// Mean weight over selected off-diagonal pairs; 0 when none selected.
fn mean_selected_weight(sg: &Supergraph) -> f64 {
    let n = sg.n_graphs();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && sg.adjacency.get(i, j) {
                total += sg.weights.get(i, j);
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

/// One batch of Floyd sweeps over the supergraph, mutating in place.
/// Returns the number of accepted replacements.
fn composition_sweeps(
    x: &mut MatchingSet,
    c: &ClusterIndicator,
    ks: &PairwiseAffinities,
    sweeps: usize,
) -> Result<usize> {
    let n = x.n_graphs();
    // A pair is composable when a supergraph path joins it, so reachability
    // is the transitive closure of the indicator: component membership.
    let component = c.component_labels();
    let mut reach = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if component[i] == component[j] {
                reach[i * n + j] = true;
            }
        }
    }
    let mut scores = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                scores[i * n + j] = ks.normalized_score(i, j, x.get(i, j));
            }
        }
    }
    let mut accepted = 0usize;
    for _ in 0..sweeps {
        for k in 0..n {
            for i in 0..n {
                if i == k || !reach[i * n + k] {
                    continue;
                }
                for j in 0..n {
                    if j == i || j == k || !reach[k * n + j] {
                        continue;
                    }
                    let candidate = x.get(i, k).compose(x.get(k, j))?;
                    let s = ks.normalized_score(i, j, &candidate);
                    if s > scores[i * n + j] + IMPROVE_EPS {
                        x.set_pair(i, j, candidate)?;
                        scores[i * n + j] = s;
                        scores[j * n + i] = s;
                        accepted += 1;
                    }
                }
            }
        }
    }
    Ok(accepted)
}

/// Maximizes the surrogate by matching composition along indicator paths.
/// Per-pair scores never decrease; the symmetric mirror is kept in sync.
pub fn maximize_composition(
    x: &MatchingSet,
    c: &ClusterIndicator,
    ks: &PairwiseAffinities,
    sweeps: usize,
) -> Result<MatchingSet> {
    if c.n_graphs() != x.n_graphs() || ks.n_graphs() != x.n_graphs() {
        return Err(Error::contract("maximize_composition: size mismatch"));
    }
    let mut out = x.clone();
    composition_sweeps(&mut out, c, ks, sweeps)?;
    Ok(out)
}

/// Ordered count of off-diagonal entries that differ between indicators.
pub fn structure_change(c_prev: &ClusterIndicator, c_next: &ClusterIndicator) -> Result<usize> {
    let n = c_prev.n_graphs();
    if c_next.n_graphs() != n {
        return Err(Error::contract("structure_change: sizes differ"));
    }
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j && c_prev.get(i, j) != c_next.get(i, j) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Full solve from raw geometry: affinities, initialization, the
/// surrogate/maximization loop with early stopping, and final clustering on
/// the converged scores.
pub fn m3c_solve(graphs: &[PointGraph], cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if graphs.len() < 2 {
        return Err(Error::config("m3c_solve: need at least 2 graphs"));
    }
    if graphs.len() < cfg.n_clusters {
        return Err(Error::config(format!(
            "m3c_solve: {} graphs cannot form {} clusters",
            graphs.len(),
            cfg.n_clusters
        )));
    }
    let ks = PairwiseAffinities::build_raw(graphs, cfg.beta, cfg.sigma_sq)?;
    let x0 = initialize_matchings(graphs, &ks, &cfg.rrwm)?;
    solve_with_affinities(x0, &ks, cfg)
}

/// The MM loop on externally prepared matchings and affinities.
pub fn solve_with_affinities(
    mut x: MatchingSet,
    ks: &PairwiseAffinities,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    let n = x.n_graphs();
    if n < cfg.n_clusters {
        return Err(Error::config(format!(
            "{n} graphs cannot form {} clusters",
            cfg.n_clusters
        )));
    }
    let mut trace = RunTrace::default();
    let mut prev_adjacency: Option<ClusterIndicator> = None;
    let mut sg = build_supergraph(&x, ks, cfg)?;
    for _ in 1..=cfg.max_iters {
        let tick = Instant::now();
        let accepted = composition_sweeps(&mut x, &sg.adjacency, ks, cfg.floyd_sweeps)?;
        let sg_next = build_supergraph(&x, ks, cfg)?;
        let objective = mean_selected_weight(&sg_next);
        let change = match &prev_adjacency {
            Some(prev) => structure_change(prev, &sg.adjacency)?,
            None => sg.adjacency.ordered_selected(),
        };
        trace.iterations.push(IterationRecord {
            objective,
            structure_change: change,
            wall_time_s: tick.elapsed().as_secs_f64(),
        });
        let fixed_point = change == 0 && accepted == 0;
        prev_adjacency = Some(std::mem::replace(&mut sg, sg_next).adjacency);
        if fixed_point {
            break;
        }
    }

    // Final division always re-derived from converged scores; the relaxed
    // indicator is intentionally non-transitive.
    let sparse = knn_sparsify(&sg.weights, cfg.knn_k)?;
    let division = spectral_cluster(&sparse, cfg.n_clusters, &SpectralParams::with_seed(cfg.seed))?;
    Ok(SolveResult { matchings: x, division, trace })
}
