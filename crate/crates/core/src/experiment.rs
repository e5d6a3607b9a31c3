//! Experiment orchestration: repeated solves, metric evaluation against
//! ground truth, and JSON/CSV result emission.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assignment::{Assignment, MatchingSet};
use crate::config::SolverConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::PointGraph;
use crate::indicator::{division_to_indicator, ClusterDivision};
use crate::metrics::{clustering_accuracy, clustering_purity, matching_accuracy, rand_index};
use crate::solver::{m3c_solve, RunTrace, SolveResult};
use crate::synth::{synth_generate, SynthConfig};

/// Metric values; `None` marks metrics that need unavailable ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricValues {
    pub ma: Option<f64>,
    pub cp: Option<f64>,
    pub ri: Option<f64>,
    pub ca: Option<f64>,
}

/// Sparse serialization of one pairwise matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatches {
    pub i: usize,
    pub j: usize,
    pub matches: Vec<(usize, usize)>,
}

/// Outcome of one solver repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub repeat: usize,
    pub seed: u64,
    pub metrics: MetricValues,
    pub wall_time_s: f64,
    pub trace: RunTrace,
    /// Predicted cluster label per graph.
    pub division: Vec<usize>,
    /// Upper-triangle pairwise matchings.
    pub matchings: Vec<PairMatches>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: MetricValues,
    pub std: MetricValues,
    pub mean_wall_time_s: f64,
}

/// All repeats of one experiment plus the aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBatch {
    pub config: SolverConfig,
    pub n_graphs: usize,
    pub results: Vec<ExperimentResult>,
    pub summary: MetricSummary,
}

impl ExperimentBatch {
    /// Copy with wall-clock fields zeroed; everything that remains is fully
    /// determined by the seeds.
    pub fn with_zeroed_timing(&self) -> ExperimentBatch {
        let mut out = self.clone();
        out.summary.mean_wall_time_s = 0.0;
        for r in out.results.iter_mut() {
            r.wall_time_s = 0.0;
            for it in r.trace.iterations.iter_mut() {
                it.wall_time_s = 0.0;
            }
        }
        out
    }
}

fn matching_set_to_pairs(x: &MatchingSet) -> Vec<PairMatches> {
    let n = x.n_graphs();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(PairMatches { i, j, matches: x.get(i, j).pairs().collect() });
        }
    }
    out
}

/// Rebuilds a matching set from its sparse upper-triangle form.
pub fn matching_set_from_pairs(node_counts: &[usize], pairs: &[PairMatches]) -> Result<MatchingSet> {
    let mut x = MatchingSet::new(node_counts);
    for pm in pairs {
        if pm.i >= node_counts.len() || pm.j >= node_counts.len() || pm.i == pm.j {
            return Err(Error::parse(format!("matching for invalid pair ({}, {})", pm.i, pm.j)));
        }
        let a = Assignment::from_pairs(node_counts[pm.i], node_counts[pm.j], &pm.matches)
            .map_err(|e| Error::parse(e.to_string()))?;
        x.set_pair(pm.i, pm.j, a)?;
    }
    Ok(x)
}

/// Metrics of one solve against whatever ground truth is available.
pub fn evaluate(
    solved_matchings: &MatchingSet,
    solved_division: &ClusterDivision,
    gt_matchings: Option<&MatchingSet>,
    gt_division: Option<&ClusterDivision>,
) -> Result<MetricValues> {
    let mut m = MetricValues::default();
    if let Some(gt_div) = gt_division {
        m.cp = Some(clustering_purity(solved_division, gt_div)?);
        m.ri = Some(rand_index(solved_division, gt_div)?);
        m.ca = Some(clustering_accuracy(solved_division, gt_div)?);
        if let Some(gt_x) = gt_matchings {
            let ma = matching_accuracy(solved_matchings, gt_x, &division_to_indicator(gt_div))?;
            m.ma = Some(ma.value);
        }
    }
    Ok(m)
}

fn result_from_solve(
    repeat: usize,
    seed: u64,
    solved: SolveResult,
    wall_time_s: f64,
    gt_matchings: Option<&MatchingSet>,
    gt_division: Option<&ClusterDivision>,
) -> Result<ExperimentResult> {
    let metrics = evaluate(&solved.matchings, &solved.division, gt_matchings, gt_division)?;
    Ok(ExperimentResult {
        repeat,
        seed,
        metrics,
        wall_time_s,
        trace: solved.trace,
        division: solved.division.labels().to_vec(),
        matchings: matching_set_to_pairs(&solved.matchings),
    })
}

fn summarize(results: &[ExperimentResult]) -> MetricSummary {
    fn stats(values: &[Option<f64>]) -> (Option<f64>, Option<f64>) {
        let present: Vec<f64> = values.iter().filter_map(|v| *v).collect();
        if present.is_empty() {
            return (None, None);
        }
        let n = present.len() as f64;
        let mean = present.iter().sum::<f64>() / n;
        let std = if present.len() > 1 {
            (present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        (Some(mean), Some(std))
    }
    let (ma_m, ma_s) = stats(&results.iter().map(|r| r.metrics.ma).collect::<Vec<_>>());
    let (cp_m, cp_s) = stats(&results.iter().map(|r| r.metrics.cp).collect::<Vec<_>>());
    let (ri_m, ri_s) = stats(&results.iter().map(|r| r.metrics.ri).collect::<Vec<_>>());
    let (ca_m, ca_s) = stats(&results.iter().map(|r| r.metrics.ca).collect::<Vec<_>>());
    MetricSummary {
        mean: MetricValues { ma: ma_m, cp: cp_m, ri: ri_m, ca: ca_m },
        std: MetricValues { ma: ma_s, cp: cp_s, ri: ri_s, ca: ca_s },
        mean_wall_time_s: results.iter().map(|r| r.wall_time_s).sum::<f64>()
            / results.len().max(1) as f64,
    }
}

/// Runs the solver `repeats` times on fixed input graphs; repeat `k` uses
/// solver seed `cfg.seed + k`.
pub fn run_experiment(
    graphs: &[PointGraph],
    gt_matchings: Option<&MatchingSet>,
    gt_division: Option<&ClusterDivision>,
    cfg: &SolverConfig,
    repeats: usize,
) -> Result<ExperimentBatch> {
    if repeats == 0 {
        return Err(Error::config("run_experiment: repeats must be at least 1"));
    }
    let mut results = Vec::with_capacity(repeats);
    for rep in 0..repeats {
        let mut rep_cfg = cfg.clone();
        rep_cfg.seed = cfg.seed + rep as u64;
        let tick = Instant::now();
        let solved = m3c_solve(graphs, &rep_cfg)?;
        let wall = tick.elapsed().as_secs_f64();
        results.push(result_from_solve(rep, rep_cfg.seed, solved, wall, gt_matchings, gt_division)?);
    }
    let summary = summarize(&results);
    Ok(ExperimentBatch { config: cfg.clone(), n_graphs: graphs.len(), results, summary })
}

/// Like [`run_experiment`] for a loaded dataset.
pub fn run_dataset_experiment(
    data: &Dataset,
    cfg: &SolverConfig,
    repeats: usize,
) -> Result<ExperimentBatch> {
    run_experiment(
        &data.graphs,
        data.gt_matchings.as_ref(),
        data.gt_division.as_ref(),
        cfg,
        repeats,
    )
}

/// Fully synthetic protocol: repeat `k` regenerates the instance with
/// dataset seed `synth.seed + k` and solves with seed `cfg.seed + k`.
pub fn run_synth_experiment(
    synth: &SynthConfig,
    cfg: &SolverConfig,
    repeats: usize,
) -> Result<ExperimentBatch> {
    if repeats == 0 {
        return Err(Error::config("run_synth_experiment: repeats must be at least 1"));
    }
    let mut results = Vec::with_capacity(repeats);
    let mut n_graphs = 0;
    for rep in 0..repeats {
        let mut rep_synth = synth.clone();
        rep_synth.seed = synth.seed + rep as u64;
        let data = synth_generate(&rep_synth)?;
        n_graphs = data.graphs.len();
        let mut rep_cfg = cfg.clone();
        rep_cfg.seed = cfg.seed + rep as u64;
        let tick = Instant::now();
        let solved = m3c_solve(&data.graphs, &rep_cfg)?;
        let wall = tick.elapsed().as_secs_f64();
        results.push(result_from_solve(
            rep,
            rep_cfg.seed,
            solved,
            wall,
            Some(&data.gt_matchings),
            Some(&data.gt_division),
        )?);
    }
    let summary = summarize(&results);
    Ok(ExperimentBatch { config: cfg.clone(), n_graphs, results, summary })
}

pub fn save_results(path: impl AsRef<Path>, batch: &ExperimentBatch) -> Result<()> {
    let text = serde_json::to_string_pretty(batch).map_err(|e| Error::parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_results(path: impl AsRef<Path>) -> Result<ExperimentBatch> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::parse(e.to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV row per repeat: metrics, timing, and iteration count.
pub fn write_results_csv(path: impl AsRef<Path>, batch: &ExperimentBatch) -> Result<()> {
    let mut out = String::from("repeat,seed,ma,cp,ri,ca,wall_time_s,iterations\n");
    for r in &batch.results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.repeat,
            r.seed,
            fmt_opt(r.metrics.ma),
            fmt_opt(r.metrics.cp),
            fmt_opt(r.metrics.ri),
            fmt_opt(r.metrics.ca),
            r.wall_time_s,
            r.trace.iterations.len(),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Per-iteration objective and structure-change CSV.
pub fn write_trace_csv(w: &mut impl std::io::Write, trace: &RunTrace) -> Result<()> {
    writeln!(w, "iteration,objective,structure_change,wall_time_s")?;
    for (t, rec) in trace.iterations.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{}",
            t + 1,
            rec.objective,
            rec.structure_change,
            rec.wall_time_s
        )?;
    }
    Ok(())
}
