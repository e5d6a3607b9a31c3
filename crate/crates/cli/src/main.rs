//! Command-line shell: synthetic dataset generation, solver runs with
//! JSON/CSV results, metric evaluation, and convergence traces.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use m3c::config::{RMode, Scheme};
use m3c::dataset::{load_dataset, save_synth};
use m3c::error::Error;
use m3c::experiment::{
    load_results, matching_set_from_pairs, run_dataset_experiment, save_results,
    write_results_csv, write_trace_csv, MetricValues,
};
use m3c::indicator::ClusterDivision;
use m3c::metrics::{clustering_accuracy, clustering_purity, matching_accuracy, rand_index};
use m3c::{m3c_solve, SolverConfig, SynthConfig};

#[derive(Parser)]
#[command(
    name = "m3c",
    about = "Joint graph matching and clustering over mixtures of graph categories",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic mixture dataset with planted ground truth.
    Synth(SynthArgs),
    /// Solve a dataset and write results as JSON (optionally CSV).
    Run(RunArgs),
    /// Evaluate saved results against a ground-truth dataset.
    Eval(EvalArgs),
    /// Emit the per-iteration objective and structure-change trace as CSV.
    Trace(TraceArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of classes.
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Graphs per class; a comma-separated list gives unbalanced classes.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    graphs_per_class: Vec<usize>,
    /// Prototype keypoints per class.
    #[arg(long, default_value_t = 10)]
    inliers: usize,
    /// Random extra nodes per graph.
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    /// Gaussian coordinate noise, unit-square units.
    #[arg(long, default_value_t = 0.0)]
    deform: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Hard,
    Global,
    Local,
    Fuse,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Hard => Scheme::Hard,
            SchemeArg::Global => Scheme::Global,
            SchemeArg::Local => Scheme::Local,
            SchemeArg::Fuse => Scheme::Fuse,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Surrogate scheme.
    #[arg(long, value_enum, default_value = "fuse")]
    scheme: SchemeArg,
    /// Pair-selection ratio in (0, 1], or "auto" for connect-until.
    #[arg(long, default_value = "auto")]
    r: String,
    /// Number of clusters to emit.
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    /// Neighbor count for score sparsification.
    #[arg(long, default_value_t = 10)]
    knn: usize,
    /// Edge-feature weight of the geometric affinity.
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    /// Scale of the geometric affinity.
    #[arg(long, default_value_t = 0.03)]
    sigma_sq: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn to_config(&self) -> Result<SolverConfig, Error> {
        let r_mode = if self.r == "auto" {
            RMode::Auto
        } else {
            let r: f64 = self
                .r
                .parse()
                .map_err(|_| Error::Config(format!("--r must be a float or \"auto\", got {:?}", self.r)))?;
            RMode::Fixed(r)
        };
        let mut cfg = SolverConfig::new(self.clusters);
        cfg.scheme = self.scheme.into();
        cfg.r_mode = r_mode;
        cfg.max_iters = self.max_iters;
        cfg.knn_k = self.knn;
        cfg.beta = self.beta;
        cfg.sigma_sq = self.sigma_sq;
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Input dataset (JSON).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Independent repeats; repeat k uses seed + k.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Output results path (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional flat CSV, one row per repeat.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Results JSON produced by `run`.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth dataset (JSON).
    #[arg(long)]
    gt: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    /// Input dataset (JSON).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fmt_metric(name: &str, v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{name} {x:.4}"),
        None => format!("{name} unavailable"),
    }
}

fn print_summary(mean: &MetricValues, wall: f64) {
    println!("{}", fmt_metric("MA", mean.ma));
    println!("{}", fmt_metric("CP", mean.cp));
    println!("{}", fmt_metric("RI", mean.ri));
    println!("{}", fmt_metric("CA", mean.ca));
    println!("time(s) {wall:.3}");
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let cfg = SynthConfig {
        n_classes: args.classes,
        graphs_per_class: args.graphs_per_class,
        n_inliers: args.inliers,
        n_outliers: args.outliers,
        deform_sigma: args.deform,
        seed: args.seed,
    };
    let out = m3c::synth_generate(&cfg)?;
    save_synth(&args.out, &out)?;
    println!(
        "wrote {} graphs ({} classes) to {}",
        out.graphs.len(),
        cfg.n_classes,
        args.out.display()
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let cfg = args.solver.to_config()?;
    let data = load_dataset(&args.input)?;
    let batch = run_dataset_experiment(&data, &cfg, args.repeats)?;
    save_results(&args.out, &batch)?;
    if let Some(csv) = &args.csv {
        write_results_csv(csv, &batch)?;
    }
    print_summary(&batch.summary.mean, batch.summary.mean_wall_time_s);
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), Error> {
    let batch = load_results(&args.pred)?;
    let gt = load_dataset(&args.gt)?;
    if batch.n_graphs != gt.graphs.len() {
        return Err(Error::Config(format!(
            "prediction covers {} graphs but ground truth has {}",
            batch.n_graphs,
            gt.graphs.len()
        )));
    }
    let counts: Vec<usize> = gt.graphs.iter().map(|g| g.n_nodes()).collect();
    let gt_indicator = gt.gt_division.as_ref().map(m3c::indicator::division_to_indicator);

    let mut sums = [0.0f64; 4];
    let mut have = [false; 4];
    for result in &batch.results {
        let division = ClusterDivision::from_labels(result.division.clone())
            .map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(gt_div) = &gt.gt_division {
            sums[1] += clustering_purity(&division, gt_div)?;
            sums[2] += rand_index(&division, gt_div)?;
            sums[3] += clustering_accuracy(&division, gt_div)?;
            have[1] = true;
            have[2] = true;
            have[3] = true;
        }
        if let (Some(gt_x), Some(c_gt)) = (&gt.gt_matchings, &gt_indicator) {
            let x = matching_set_from_pairs(&counts, &result.matchings)?;
            sums[0] += matching_accuracy(&x, gt_x, c_gt)?.value;
            have[0] = true;
        }
    }
    let n = batch.results.len() as f64;
    let pick = |i: usize| have[i].then(|| sums[i] / n);
    print_summary(
        &MetricValues { ma: pick(0), cp: pick(1), ri: pick(2), ca: pick(3) },
        batch.summary.mean_wall_time_s,
    );
    Ok(())
}

fn cmd_trace(args: TraceArgs) -> Result<(), Error> {
    let cfg = args.solver.to_config()?;
    let data = load_dataset(&args.input)?;
    let solved = m3c_solve(&data.graphs, &cfg)?;
    match &args.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)?;
            write_trace_csv(&mut file, &solved.trace)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            write_trace_csv(&mut stdout.lock(), &solved.trace)?;
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Run(args) => cmd_run(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Trace(args) => cmd_trace(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::Io(_) => ExitCode::from(3),
                Error::Config(_) | Error::Contract(_) => ExitCode::from(2),
            }
        }
    }
}
