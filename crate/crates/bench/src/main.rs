use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grassmann_bench::{
    parse_algorithm_list, parse_beta, parse_line_search, run_benchmark, write_report_csvs,
    BenchError, BenchReport, Experiment, RunConfig,
};
use grassmann_core::solvers::StopReason;

/// Benchmark harness for Grassmannian optimization in the involution
/// model. Each subcommand generates a seeded problem instance, runs the
/// selected algorithms from a shared warm-started initial point, and
/// reports per-iteration convergence traces.
#[derive(Parser)]
#[command(name = "grassmann-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    experiment: ExperimentCommand,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Minimize the trace objective tr(F·Q); the closed-form minimizer
    /// supplies a per-iteration error column.
    Quadratic(CommonArgs),
    /// Subspace Procrustes: minimize the misfit between A and B·Q
    /// against the closed-form solution.
    Procrustes(CommonArgs),
    /// Karcher mean of a set of anchor subspaces, started at the first
    /// anchor.
    Karcher(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Ambient dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Subspace dimension (at most n).
    #[arg(long)]
    k: Option<usize>,
    /// Anchor count for the karcher experiment.
    #[arg(long)]
    m: Option<usize>,
    /// Seed for problem data and the initial point.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated algorithms: cayley-sd (bb), geodesic-sd (gd),
    /// newton (nt), cg, lbfgs (qn).
    #[arg(long)]
    algos: Option<String>,
    /// Iteration budget per algorithm.
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Stop when the Riemannian gradient norm falls below this.
    #[arg(long = "grad-tol")]
    grad_tol: Option<f64>,
    /// Shared warm start: Cayley/BB iterations run before every
    /// algorithm.
    #[arg(long)]
    warmup: Option<usize>,
    /// CG beta formula: pr, fr, hs, or dy.
    #[arg(long)]
    beta: Option<String>,
    /// Step selection: bb or armijo.
    #[arg(long = "line-search")]
    line_search: Option<String>,
    /// Directory receiving one trace CSV per algorithm.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Flat JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem data files instead of seeded data (quadratic: F;
    /// procrustes: A then B; karcher: one involution per anchor,
    /// overriding --m).
    #[arg(long)]
    data: Vec<PathBuf>,
}

fn build_config(experiment: Experiment, args: &CommonArgs) -> Result<RunConfig, BenchError> {
    let mut config = RunConfig::defaults(experiment);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        config.apply_json(&text)?;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(m) = args.m {
        config.anchors = m;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(algos) = &args.algos {
        config.algorithms = parse_algorithm_list(algos)?;
    }
    if let Some(max_iters) = args.max_iters {
        config.max_iters = max_iters;
    }
    if let Some(grad_tol) = args.grad_tol {
        config.grad_tol = grad_tol;
    }
    if let Some(warmup) = args.warmup {
        config.warmup = warmup;
    }
    if let Some(beta) = &args.beta {
        config.cg_beta = parse_beta(beta)?;
    }
    if let Some(line_search) = &args.line_search {
        config.line_search = parse_line_search(line_search)?;
    }
    if args.output.is_some() {
        config.output = args.output.clone();
    }
    if !args.data.is_empty() {
        config.data = args.data.clone();
        if experiment == Experiment::Karcher {
            config.anchors = config.data.len();
        }
    }
    config.validate()?;
    Ok(config)
}

fn print_summary(config: &RunConfig, report: &BenchReport) {
    println!(
        "{} on Gr({}, {}), seed {}",
        report.experiment,
        report.dims.k(),
        report.dims.n(),
        config.seed
    );
    if let Some(f_star) = report.f_star {
        println!("closed-form optimum f* = {f_star:.12e}");
    }
    println!(
        "{:<12} {:>6} {:>10} {:>18} {:>12} {:>12} {:>10}",
        "algorithm", "iters", "status", "final f", "grad_norm", "error", "time_s"
    );
    for run in &report.runs {
        match &run.result {
            Ok(outcome) => {
                let last = outcome.trace.last().expect("traces are never empty");
                let status = match outcome.stop {
                    StopReason::GradientTolerance => "converged",
                    StopReason::MaxIterations => "max-iters",
                    StopReason::NoProgress => "stalled",
                };
                let error = last
                    .error_to_truth
                    .map(|e| format!("{e:.4e}"))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "{:<12} {:>6} {:>10} {:>18.12e} {:>12.4e} {:>12} {:>10.4}",
                    run.algorithm.name(),
                    outcome.trace.steps(),
                    status,
                    last.f,
                    last.grad_norm,
                    error,
                    last.elapsed_s
                );
            }
            Err(error) => {
                println!("{:<12} failed: {error}", run.algorithm.name());
            }
        }
    }
}

fn real_main() -> Result<bool, BenchError> {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.experiment {
        ExperimentCommand::Quadratic(args) => (Experiment::Quadratic, args),
        ExperimentCommand::Procrustes(args) => (Experiment::Procrustes, args),
        ExperimentCommand::Karcher(args) => (Experiment::Karcher, args),
    };
    let config = build_config(experiment, args)?;
    let report = run_benchmark(&config)?;
    if let Some(dir) = &config.output {
        for path in write_report_csvs(&report, dir)? {
            println!("wrote {}", path.display());
        }
    }
    print_summary(&config, &report);
    Ok(report.all_succeeded())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
    }
}
