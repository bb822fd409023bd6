//! Experiment harness behind the benchmark binary: seeded problem
//! generation, a shared warm-start protocol, per-algorithm solver runs,
//! and CSV trace serialization.

use std::fmt;
use std::path::{Path, PathBuf};

use grassmann_core::matio::read_matrix;
use grassmann_core::point::{random_gaussian_matrix, random_point_with_rng};
use grassmann_core::problems::{KarcherProblem, ProcrustesProblem, QuadraticProblem};
use grassmann_core::solvers::{
    run, Algorithm, ArmijoParams, CgBeta, LineSearch, SolverConfig, SolverOutcome, SolverTrace,
    TraceRecord,
};
use grassmann_core::{GrassmannDims, GrassmannError, InvolutionPoint};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TRACE_HEADER: &str = "iter,f,grad_norm,error,orth_dev,time_s";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Bad flags, config file contents, or problem data; maps to exit
    /// code 2.
    #[error("{0}")]
    Config(String),
    #[error("trace parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Quadratic,
    Procrustes,
    Karcher,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Quadratic => "quadratic",
            Experiment::Procrustes => "procrustes",
            Experiment::Karcher => "karcher",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses one algorithm token; canonical names plus the short aliases
/// used in the experiment write-ups (bb, gd, nt, qn).
pub fn parse_algorithm(token: &str) -> Result<Algorithm, BenchError> {
    match token.trim().to_ascii_lowercase().as_str() {
        "cayley-sd" | "bb" => Ok(Algorithm::CayleySd),
        "geodesic-sd" | "gd" => Ok(Algorithm::GeodesicSd),
        "newton" | "nt" => Ok(Algorithm::Newton),
        "cg" => Ok(Algorithm::Cg),
        "lbfgs" | "qn" => Ok(Algorithm::Lbfgs),
        other => Err(BenchError::Config(format!(
            "unknown algorithm '{other}' (expected cayley-sd, geodesic-sd, newton, cg, or lbfgs)"
        ))),
    }
}

/// Parses a comma-separated algorithm list, deduplicating while keeping
/// first-occurrence order.
pub fn parse_algorithm_list(text: &str) -> Result<Vec<Algorithm>, BenchError> {
    let mut out = Vec::new();
    for token in text.split(',') {
        if token.trim().is_empty() {
            continue;
        }
        let algorithm = parse_algorithm(token)?;
        if !out.contains(&algorithm) {
            out.push(algorithm);
        }
    }
    if out.is_empty() {
        return Err(BenchError::Config("empty algorithm list".into()));
    }
    Ok(out)
}

pub fn parse_beta(token: &str) -> Result<CgBeta, BenchError> {
    match token.trim().to_ascii_lowercase().as_str() {
        "pr" => Ok(CgBeta::Pr),
        "fr" => Ok(CgBeta::Fr),
        "hs" => Ok(CgBeta::Hs),
        "dy" => Ok(CgBeta::Dy),
        other => Err(BenchError::Config(format!(
            "unknown beta formula '{other}' (expected pr, fr, hs, or dy)"
        ))),
    }
}

pub fn parse_line_search(token: &str) -> Result<LineSearch, BenchError> {
    match token.trim().to_ascii_lowercase().as_str() {
        "bb" => Ok(LineSearch::Bb),
        "armijo" => Ok(LineSearch::Armijo(ArmijoParams::default())),
        other => Err(BenchError::Config(format!(
            "unknown line search '{other}' (expected bb or armijo)"
        ))),
    }
}

/// Full description of one benchmark batch. Defaults reproduce the
/// standard experiment scale (n = 16, k = 6, three anchors, seed 0).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub k: usize,
    /// Anchor count for the Karcher experiment; ignored elsewhere.
    pub anchors: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Shared warm start: this many Cayley/BB iterations whose terminal
    /// point seeds every algorithm in the batch.
    pub warmup: usize,
    pub cg_beta: CgBeta,
    pub line_search: LineSearch,
    /// Directory for per-algorithm trace CSVs; no files written when
    /// absent.
    pub output: Option<PathBuf>,
    /// Custom problem data files (quadratic: F; procrustes: A then B;
    /// karcher: one involution per anchor, overriding the anchor count).
    pub data: Vec<PathBuf>,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let algorithms = match experiment {
            // Newton needs a second derivative, which the Karcher
            // objective does not provide.
            Experiment::Karcher => vec![
                Algorithm::CayleySd,
                Algorithm::GeodesicSd,
                Algorithm::Cg,
                Algorithm::Lbfgs,
            ],
            _ => vec![
                Algorithm::CayleySd,
                Algorithm::GeodesicSd,
                Algorithm::Newton,
                Algorithm::Cg,
                Algorithm::Lbfgs,
            ],
        };
        let line_search = match experiment {
            Experiment::Karcher => LineSearch::Armijo(ArmijoParams::default()),
            _ => LineSearch::Bb,
        };
        RunConfig {
            experiment,
            n: 16,
            k: 6,
            anchors: 3,
            seed: 0,
            algorithms,
            max_iters: 100,
            grad_tol: 1e-10,
            warmup: 20,
            cg_beta: CgBeta::Pr,
            line_search,
            output: None,
            data: Vec::new(),
        }
    }

    /// Applies a flat JSON config document on top of the current values.
    /// Unknown keys and wrong types are rejected with the field named.
    pub fn apply_json(&mut self, text: &str) -> Result<(), BenchError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| BenchError::Config(format!("config file: {e}")))?;
        let object = value
            .as_object()
            .ok_or_else(|| BenchError::Config("config file: expected a JSON object".into()))?;
        for (key, val) in object {
            match key.as_str() {
                "n" => self.n = unsigned_field(key, val)? as usize,
                "k" => self.k = unsigned_field(key, val)? as usize,
                "m" => self.anchors = unsigned_field(key, val)? as usize,
                "seed" => self.seed = unsigned_field(key, val)?,
                "algos" => self.algorithms = algorithms_field(key, val)?,
                "max_iters" => self.max_iters = unsigned_field(key, val)? as usize,
                "grad_tol" => self.grad_tol = float_field(key, val)?,
                "warmup" => self.warmup = unsigned_field(key, val)? as usize,
                "beta" => self.cg_beta = parse_beta(string_field(key, val)?)?,
                "line_search" => self.line_search = parse_line_search(string_field(key, val)?)?,
                "output" => self.output = Some(PathBuf::from(string_field(key, val)?)),
                other => {
                    return Err(BenchError::Config(format!(
                        "config file: unknown key '{other}'"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Structural checks shared by the CLI and the library entry point.
    pub fn validate(&self) -> Result<GrassmannDims, BenchError> {
        let dims = GrassmannDims::new(self.n, self.k)
            .map_err(|e| BenchError::Config(e.to_string()))?;
        if self.algorithms.is_empty() {
            return Err(BenchError::Config("no algorithms selected".into()));
        }
        if self.experiment == Experiment::Karcher && self.anchors == 0 && self.data.is_empty() {
            return Err(BenchError::Config(
                "the karcher experiment needs at least one anchor".into(),
            ));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol >= 0.0) {
            return Err(BenchError::Config(format!(
                "gradient tolerance must be finite and nonnegative, got {}",
                self.grad_tol
            )));
        }
        let expected_data = match self.experiment {
            Experiment::Quadratic => 1,
            Experiment::Procrustes => 2,
            Experiment::Karcher => self.data.len().max(1),
        };
        if !self.data.is_empty() && self.data.len() != expected_data {
            return Err(BenchError::Config(format!(
                "the {} experiment takes {} data file(s), got {}",
                self.experiment,
                expected_data,
                self.data.len()
            )));
        }
        Ok(dims)
    }
}

fn unsigned_field(key: &str, val: &serde_json::Value) -> Result<u64, BenchError> {
    val.as_u64().ok_or_else(|| {
        BenchError::Config(format!(
            "config file: field '{key}': expected a nonnegative integer, got {val}"
        ))
    })
}

fn float_field(key: &str, val: &serde_json::Value) -> Result<f64, BenchError> {
    val.as_f64().ok_or_else(|| {
        BenchError::Config(format!(
            "config file: field '{key}': expected a number, got {val}"
        ))
    })
}

fn string_field<'a>(key: &str, val: &'a serde_json::Value) -> Result<&'a str, BenchError> {
    val.as_str().ok_or_else(|| {
        BenchError::Config(format!(
            "config file: field '{key}': expected a string, got {val}"
        ))
    })
}

fn algorithms_field(key: &str, val: &serde_json::Value) -> Result<Vec<Algorithm>, BenchError> {
    match val {
        serde_json::Value::String(s) => parse_algorithm_list(s),
        serde_json::Value::Array(items) => {
            let mut joined = Vec::new();
            for item in items {
                joined.push(
                    item.as_str()
                        .ok_or_else(|| {
                            BenchError::Config(format!(
                                "config file: field '{key}': expected algorithm names, got {item}"
                            ))
                        })?
                        .to_string(),
                );
            }
            parse_algorithm_list(&joined.join(","))
        }
        other => Err(BenchError::Config(format!(
            "config file: field '{key}': expected a list or comma-separated string, got {other}"
        ))),
    }
}

/// The assembled problem of one batch, kept as data so each algorithm can
/// get a fresh objective.
enum ProblemData {
    Quadratic(QuadraticProblem),
    Procrustes(ProcrustesProblem),
    Karcher(KarcherProblem),
}

impl ProblemData {
    fn objective(&self) -> grassmann_core::calculus::Objective {
        match self {
            ProblemData::Quadratic(p) => p.objective(),
            ProblemData::Procrustes(p) => p.objective(),
            ProblemData::Karcher(p) => p.objective(),
        }
    }
}

pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    /// The solver outcome, or the error that ended this algorithm's run.
    /// Failures stay local to their algorithm.
    pub result: Result<SolverOutcome, GrassmannError>,
}

pub struct BenchReport {
    pub experiment: Experiment,
    pub dims: GrassmannDims,
    /// Closed-form optimal value when the experiment has one.
    pub f_star: Option<f64>,
    pub runs: Vec<AlgorithmReport>,
}

impl BenchReport {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.result.is_ok())
    }
}

fn load_matrix(path: &Path, n: usize) -> Result<DMatrix<f64>, BenchError> {
    let m = read_matrix(path)
        .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    if m.shape() != (n, n) {
        return Err(BenchError::Config(format!(
            "{}: matrix is {}x{}, expected {n}x{n}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

struct AssembledProblem {
    problem: ProblemData,
    initial: InvolutionPoint,
    truth: Option<DMatrix<f64>>,
    f_star: Option<f64>,
}

fn assemble(config: &RunConfig, dims: GrassmannDims) -> Result<AssembledProblem, BenchError> {
    let n = dims.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.experiment {
        Experiment::Quadratic => {
            let f = if config.data.is_empty() {
                random_gaussian_matrix(n, n, &mut rng)
            } else {
                load_matrix(&config.data[0], n)?
            };
            let problem =
                QuadraticProblem::new(dims, f).map_err(|e| BenchError::Config(e.to_string()))?;
            let initial = random_point_with_rng(dims, &mut rng);
            let (q_star, f_star) = problem
                .closed_minimizer()
                .map_err(|e| BenchError::Config(format!("quadratic cost matrix: {e}")))?;
            Ok(AssembledProblem {
                problem: ProblemData::Quadratic(problem),
                initial,
                truth: Some(q_star.q().clone()),
                f_star: Some(f_star),
            })
        }
        Experiment::Procrustes => {
            let (a, b) = if config.data.is_empty() {
                (
                    random_gaussian_matrix(n, n, &mut rng),
                    random_gaussian_matrix(n, n, &mut rng),
                )
            } else {
                (load_matrix(&config.data[0], n)?, load_matrix(&config.data[1], n)?)
            };
            let problem =
                ProcrustesProblem::new(dims, a, b).map_err(|e| BenchError::Config(e.to_string()))?;
            let initial = random_point_with_rng(dims, &mut rng);
            let q_star = problem
                .closed_minimizer()
                .map_err(|e| BenchError::Config(format!("procrustes data: {e}")))?;
            let f_star = problem.objective().value(&q_star);
            Ok(AssembledProblem {
                problem: ProblemData::Procrustes(problem),
                initial,
                truth: Some(q_star.q().clone()),
                f_star: Some(f_star),
            })
        }
        Experiment::Karcher => {
            let anchors: Vec<InvolutionPoint> = if config.data.is_empty() {
                (0..config.anchors)
                    .map(|_| random_point_with_rng(dims, &mut rng))
                    .collect()
            } else {
                config
                    .data
                    .iter()
                    .map(|path| {
                        let q = load_matrix(path, n)?;
                        InvolutionPoint::from_matrix(dims, q)
                            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
                    })
                    .collect::<Result<_, _>>()?
            };
            let initial = anchors[0].clone();
            let problem = KarcherProblem::new(dims, anchors)
                .map_err(|e| BenchError::Config(format!("karcher anchors: {e}")))?;
            Ok(AssembledProblem {
                problem: ProblemData::Karcher(problem),
                initial,
                truth: None,
                f_star: None,
            })
        }
    }
}

/// Runs every configured algorithm on one seeded (or file-loaded) problem
/// instance. All algorithms start from the same initial point and apply
/// the same warm-start protocol; one algorithm's failure is recorded in
/// its report entry without touching the others.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchReport, BenchError> {
    let dims = config.validate()?;
    let assembled = assemble(config, dims)?;
    let objective = assembled.problem.objective();
    let mut runs = Vec::with_capacity(config.algorithms.len());
    for &algorithm in &config.algorithms {
        let mut solver = SolverConfig::new(algorithm);
        solver.max_iters = config.max_iters;
        solver.grad_tol = config.grad_tol;
        solver.warmup_iters = config.warmup;
        solver.cg_beta = config.cg_beta;
        solver.line_search = config.line_search;
        solver.truth = assembled.truth.clone();
        let result = run(&objective, &assembled.initial, &solver);
        runs.push(AlgorithmReport { algorithm, result });
    }
    Ok(BenchReport {
        experiment: config.experiment,
        dims,
        f_star: assembled.f_star,
        runs,
    })
}

/// Formats a trace as CSV: fixed header, one row per record, 17
/// significant digits, the error column left empty when no ground truth
/// was configured.
pub fn trace_to_csv(trace: &SolverTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for record in &trace.records {
        let error = record
            .error_to_truth
            .map(|e| format!("{e:.16e}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{},{:.16e},{:.16e}\n",
            record.iter, record.f, record.grad_norm, error, record.orth_deviation,
            record.elapsed_s
        ));
    }
    out
}

pub fn emit_trace_csv(trace: &SolverTrace, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, trace_to_csv(trace))?;
    Ok(())
}

/// Parses a CSV produced by [`trace_to_csv`], reproducing the emitted
/// values exactly. The Newton shift column is not serialized, so it comes
/// back as `None`.
pub fn parse_trace_csv(text: &str) -> Result<SolverTrace, BenchError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| BenchError::Parse("empty input".into()))?;
    if header != TRACE_HEADER {
        return Err(BenchError::Parse(format!(
            "bad header '{header}', expected '{TRACE_HEADER}'"
        )));
    }
    let mut records = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(BenchError::Parse(format!(
                "row {row}: expected 6 fields, got {}",
                fields.len()
            )));
        }
        let iter: usize = fields[0]
            .parse()
            .map_err(|e| BenchError::Parse(format!("row {row}, iter: {e}")))?;
        let number = |index: usize, name: &str| -> Result<f64, BenchError> {
            let value: f64 = fields[index]
                .parse()
                .map_err(|e| BenchError::Parse(format!("row {row}, {name}: {e}")))?;
            if !value.is_finite() {
                return Err(BenchError::Parse(format!(
                    "row {row}, {name}: non-finite value {value}"
                )));
            }
            Ok(value)
        };
        let error_to_truth = if fields[3].is_empty() {
            None
        } else {
            Some(number(3, "error")?)
        };
        let record = TraceRecord {
            iter,
            f: number(1, "f")?,
            grad_norm: number(2, "grad_norm")?,
            error_to_truth,
            orth_deviation: number(4, "orth_dev")?,
            elapsed_s: number(5, "time_s")?,
            hessian_shift: None,
        };
        if let Some(previous) = records.last() {
            let previous: &TraceRecord = previous;
            if record.iter <= previous.iter {
                return Err(BenchError::Parse(format!(
                    "row {row}: iteration index {} does not increase past {}",
                    record.iter, previous.iter
                )));
            }
        }
        records.push(record);
    }
    Ok(SolverTrace { records })
}

/// Writes one CSV per successful run into `dir`, named
/// `<experiment>-<algorithm>.csv`. Returns the paths written.
pub fn write_report_csvs(report: &BenchReport, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for run in &report.runs {
        if let Ok(outcome) = &run.result {
            let path = dir.join(format!(
                "{}-{}.csv",
                report.experiment.name(),
                run.algorithm.name()
            ));
            emit_trace_csv(&outcome.trace, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}
