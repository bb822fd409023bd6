//! Optimization loops on the manifold.
//!
//! Five algorithms share one driver: steepest descent with Cayley updates,
//! steepest descent along geodesics, Newton's method, nonlinear conjugate
//! gradient, and L-BFGS. All of them work on effective blocks: the gradient
//! at the current point is a k×(n-k) block G, the step is a block S, and
//! moving along S updates the eigenbasis by
//!
//! ```text
//! V_{i+1} = V_i·exp([[0, -S/2], [Sᵀ/2, 0]])
//! ```
//!
//! (or the matching Cayley transform for the Cayley variant). Carrying a
//! block unchanged from V_i to V_{i+1} is exactly parallel transport along
//! the step, so no transport terms appear explicitly.
//!
//! Step sizes come from the Barzilai-Borwein secant formula or a
//! backtracking Armijo search along the same update map the solver uses, so
//! accepted decreases are exactly the decreases realized.

use crate::calculus::{newton_step, riemannian_gradient, Objective};
use crate::expm::exp_structured_solver;
use crate::geometry::{geodesic, retract, RetractionKind, TangentVector};
use crate::point::{involution_from_basis, InvolutionPoint};
use crate::{GrassmannError, Result};
use nalgebra::DMatrix;
use std::collections::VecDeque;
use std::time::Instant;

/// Maximum number of Armijo backtracking steps before giving up.
const MAX_BACKTRACKS: usize = 40;

/// Relative curvature threshold below which an L-BFGS pair is skipped.
const CURVATURE_TOL: f64 = 1e-12;

/// The optimization algorithms available through [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Steepest descent with Cayley-transform eigenbasis updates.
    CayleySd,
    /// Steepest descent along geodesics (structured-exponential updates).
    GeodesicSd,
    /// Newton's method on the assembled Hessian.
    Newton,
    /// Nonlinear conjugate gradient.
    Cg,
    /// Quasi-Newton with L-BFGS two-loop updates.
    Lbfgs,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::CayleySd => "cayley-sd",
            Algorithm::GeodesicSd => "geodesic-sd",
            Algorithm::Newton => "newton",
            Algorithm::Cg => "cg",
            Algorithm::Lbfgs => "lbfgs",
        }
    }
}

/// Conjugate-gradient β formulas, computed on effective blocks with plain
/// trace pairings and no transport terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgBeta {
    /// Polak-Ribière (the default).
    Pr,
    /// Fletcher-Reeves.
    Fr,
    /// Hestenes-Stiefel.
    Hs,
    /// Dai-Yuan.
    Dy,
}

/// Which Barzilai-Borwein secant ratio to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbVariant {
    /// tr(YᵀS)/tr(YᵀY), the default: the gradient difference Y is computed
    /// directly and is the more trustworthy factor.
    Short,
    /// tr(SᵀS)/tr(SᵀY).
    Long,
}

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    /// Sufficient-decrease constant, in (0, 1).
    pub c1: f64,
    /// Backtracking factor ρ, in (0, 1).
    pub backtrack: f64,
    /// First trial step.
    pub initial_step: f64,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        ArmijoParams {
            c1: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
        }
    }
}

/// Step-size strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    /// Barzilai-Borwein secant steps (unit step on the first iteration).
    /// For L-BFGS and Newton this means taking the computed step raw.
    Bb,
    /// Backtracking Armijo search along the update curve.
    Armijo(ArmijoParams),
}

/// Configuration shared by all algorithms.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub max_iters: usize,
    /// Stop when the Riemannian gradient norm √2·‖G‖_F drops to this.
    pub grad_tol: f64,
    pub cg_beta: CgBeta,
    pub lbfgs_memory: usize,
    /// Number of Cayley steepest-descent iterations run first to produce
    /// the starting point handed to the main algorithm.
    pub warmup_iters: usize,
    /// Clamp interval for Barzilai-Borwein steps.
    pub bb_clamp: (f64, f64),
    pub bb_variant: BbVariant,
    pub line_search: LineSearch,
    /// Known minimizer; when present every trace record carries
    /// ‖Q_i − Q*‖_F.
    pub truth: Option<DMatrix<f64>>,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            max_iters: 100,
            grad_tol: 1e-10,
            cg_beta: CgBeta::Pr,
            lbfgs_memory: 10,
            warmup_iters: 0,
            bb_clamp: (1e-10, 1e3),
            bb_variant: BbVariant::Short,
            line_search: LineSearch::Bb,
            truth: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(GrassmannError::InvalidConfig(msg));
        if self.max_iters == 0 {
            return fail("max_iters must be positive".into());
        }
        if !(self.grad_tol >= 0.0) {
            return fail(format!("grad_tol must be nonnegative, got {}", self.grad_tol));
        }
        let (lo, hi) = self.bb_clamp;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return fail(format!("bb_clamp must satisfy 0 < min <= max < inf, got ({lo}, {hi})"));
        }
        if self.lbfgs_memory == 0 {
            return fail("lbfgs_memory must be at least 1".into());
        }
        if let LineSearch::Armijo(p) = self.line_search {
            if !(p.c1 > 0.0 && p.c1 < 1.0) {
                return fail(format!("Armijo c1 must lie in (0,1), got {}", p.c1));
            }
            if !(p.backtrack > 0.0 && p.backtrack < 1.0) {
                return fail(format!("Armijo backtrack must lie in (0,1), got {}", p.backtrack));
            }
            if !(p.initial_step > 0.0 && p.initial_step.is_finite()) {
                return fail(format!("Armijo initial step must be positive, got {}", p.initial_step));
            }
        }
        Ok(())
    }
}

/// One row of a solver trace, written before the step of the same index.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iter: usize,
    pub f: f64,
    /// Riemannian gradient norm √2·‖G‖_F.
    pub grad_norm: f64,
    /// ‖Q_i − Q*‖_F when a true minimizer is configured.
    pub error_to_truth: Option<f64>,
    /// ‖Q_i² − I‖_F.
    pub orth_deviation: f64,
    /// Wall time since this algorithm started, in seconds.
    pub elapsed_s: f64,
    /// Levenberg shift applied in the Newton step that produced this
    /// iterate (`None` on row 0 and for non-Newton algorithms).
    pub hessian_shift: Option<f64>,
}

/// Per-iteration records, one per visited iterate including the initial
/// point, so a run of `s` steps has `s + 1` records.
#[derive(Debug, Clone, Default)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Number of steps actually taken.
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

/// Why a solver run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The Riemannian gradient norm dropped to `grad_tol`.
    GradientTolerance,
    /// The iteration budget ran out.
    MaxIterations,
    /// The line search could not find any further decrease (the objective
    /// is at its numerical floor); the trace up to this point is kept.
    NoProgress,
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct SolverOutcome {
    pub point: InvolutionPoint,
    pub trace: SolverTrace,
    /// Whether the gradient tolerance was reached before `max_iters`.
    pub converged: bool,
    pub stop: StopReason,
}

/// The Barzilai-Borwein step from the secant pair: gradient difference
/// Y = G_i − G_{i−1} against the previous effective step S_{i−1}.
/// Nonpositive or non-finite raw ratios fall back to `fallback` (the
/// previously accepted step size); the result is clamped to `clamp`.
pub fn bb_stepsize(
    current_grad: &DMatrix<f64>,
    previous_grad: &DMatrix<f64>,
    previous_step: &DMatrix<f64>,
    variant: BbVariant,
    clamp: (f64, f64),
    fallback: f64,
) -> f64 {
    let y = current_grad - previous_grad;
    let raw = match variant {
        BbVariant::Short => y.dot(previous_step) / y.dot(&y),
        BbVariant::Long => previous_step.dot(previous_step) / previous_step.dot(&y),
    };
    let chosen = if raw.is_finite() && raw > 0.0 { raw } else { fallback };
    chosen.clamp(clamp.0, clamp.1)
}

/// Backtracking Armijo search along the geodesic through `direction`:
/// returns the largest α in {α₀·ρʲ} with
/// f(γ(α)) ≤ f(Q) + c₁·α·⟨grad f, direction⟩.
pub fn armijo_linesearch_geodesic(
    obj: &Objective,
    direction: &TangentVector,
    params: &ArmijoParams,
) -> Result<f64> {
    let base = direction.base();
    let f0 = obj.value(base);
    let grad = riemannian_gradient(obj, base)?;
    let slope = grad.inner(direction)?;
    let (alpha, _, _) = backtrack(f0, slope, params, |a| {
        let candidate = geodesic(direction, a);
        let value = obj.value(&candidate);
        Ok((candidate, value))
    })?;
    Ok(alpha)
}

fn backtrack<F>(
    f0: f64,
    slope: f64,
    params: &ArmijoParams,
    eval: F,
) -> Result<(f64, InvolutionPoint, f64)>
where
    F: Fn(f64) -> Result<(InvolutionPoint, f64)>,
{
    if !(slope < 0.0) {
        return Err(GrassmannError::NotDescent { derivative: slope });
    }
    let mut alpha = params.initial_step;
    for _ in 0..=MAX_BACKTRACKS {
        let (candidate, value) = eval(alpha)?;
        if value <= f0 + params.c1 * alpha * slope {
            return Ok((alpha, candidate, value));
        }
        alpha *= params.backtrack;
    }
    Err(GrassmannError::LineSearchExhausted {
        backtracks: MAX_BACKTRACKS,
    })
}

/// Moves a point along an effective step block: Cayley transform for the
/// Cayley variant, structured exponential for everything else.
fn advance(point: &InvolutionPoint, step: &DMatrix<f64>, cayley: bool) -> Result<InvolutionPoint> {
    if cayley {
        let x = TangentVector::from_block(point, step.clone())?;
        retract(&x, RetractionKind::Cayley)
    } else {
        let rotation = exp_structured_solver(&(step * -0.5));
        let v_new = rotation.apply_right(point.v());
        let q_new = involution_from_basis(point.dims(), &v_new);
        Ok(InvolutionPoint::from_parts(point.dims(), q_new, v_new))
    }
}

fn conjugate_beta(
    kind: CgBeta,
    g_new: &DMatrix<f64>,
    g_old: &DMatrix<f64>,
    p_old: &DMatrix<f64>,
) -> f64 {
    let y = g_new - g_old;
    let raw = match kind {
        CgBeta::Pr => g_new.dot(&y) / g_old.dot(g_old),
        CgBeta::Fr => g_new.dot(g_new) / g_old.dot(g_old),
        CgBeta::Hs => -g_new.dot(&y) / p_old.dot(&y),
        CgBeta::Dy => -g_new.dot(g_new) / p_old.dot(&y),
    };
    if raw.is_finite() {
        raw
    } else {
        0.0
    }
}

/// Two-loop L-BFGS recursion on effective blocks. Pairs whose curvature
/// tr(Y_jᵀS_j) is not safely positive are skipped in both loops; the
/// initial scaling comes from the most recent kept pair (1 when none).
fn lbfgs_direction(grad: &DMatrix<f64>, history: &VecDeque<(DMatrix<f64>, DMatrix<f64>)>) -> DMatrix<f64> {
    let mut p = grad.clone();
    let mut coefficients: Vec<Option<f64>> = Vec::with_capacity(history.len());
    let mut gamma = 1.0;
    let mut gamma_set = false;
    for (s, y) in history.iter().rev() {
        let curvature = y.dot(s);
        if curvature <= CURVATURE_TOL * y.norm() * s.norm() {
            coefficients.push(None);
            continue;
        }
        if !gamma_set {
            gamma = curvature / y.dot(y);
            gamma_set = true;
        }
        let a = s.dot(&p) / curvature;
        p -= y * a;
        coefficients.push(Some(a));
    }
    let mut z = p * gamma;
    for ((s, y), a) in history.iter().zip(coefficients.iter().rev()) {
        if let Some(a) = a {
            let b = y.dot(&z) / y.dot(s);
            z += s * (a - b);
        }
    }
    -z
}

/// Runs the configured algorithm from `initial`, optionally preceded by
/// `warmup_iters` Cayley steepest-descent iterations whose terminal point
/// (but not trace) seeds the main run.
pub fn run(obj: &Objective, initial: &InvolutionPoint, config: &SolverConfig) -> Result<SolverOutcome> {
    config.validate()?;
    let n = initial.dims().n();
    if let Some(truth) = &config.truth {
        if truth.shape() != (n, n) {
            return Err(GrassmannError::InvalidConfig(format!(
                "truth matrix is {}x{}, expected {n}x{n}",
                truth.nrows(),
                truth.ncols()
            )));
        }
    }
    let start = if config.warmup_iters > 0 {
        let mut warm = SolverConfig::new(Algorithm::CayleySd);
        warm.max_iters = config.warmup_iters;
        warm.grad_tol = config.grad_tol;
        warm.bb_clamp = config.bb_clamp;
        warm.bb_variant = config.bb_variant;
        run_main(obj, initial.clone(), &warm)?.point
    } else {
        initial.clone()
    };
    run_main(obj, start, config)
}

fn run_main(obj: &Objective, start: InvolutionPoint, config: &SolverConfig) -> Result<SolverOutcome> {
    let clock = Instant::now();
    let algorithm = config.algorithm;
    let is_cayley = algorithm == Algorithm::CayleySd;
    let dims = start.dims();
    let cg_reset_period = (dims.k() * dims.complement()).max(1);

    let mut point = start;
    let mut trace = SolverTrace::default();
    let mut stop = StopReason::MaxIterations;

    let mut prev_grad: Option<DMatrix<f64>> = None;
    let mut prev_step: Option<DMatrix<f64>> = None;
    let mut prev_alpha = 1.0;
    let mut cg_dir: Option<DMatrix<f64>> = None;
    let mut cg_since_reset = 0usize;
    let mut history: VecDeque<(DMatrix<f64>, DMatrix<f64>)> = VecDeque::new();
    let mut pending_shift: Option<f64> = None;

    for iter in 0..=config.max_iters {
        let f = obj.value(&point);
        let grad = riemannian_gradient(obj, &point).map_err(|e| e.at_iteration(iter))?;

        if algorithm == Algorithm::Lbfgs {
            if let (Some(step), Some(old)) = (&prev_step, &prev_grad) {
                history.push_back((step.clone(), grad.block() - old));
                while history.len() > config.lbfgs_memory {
                    history.pop_front();
                }
            }
        }

        trace.records.push(TraceRecord {
            iter,
            f,
            grad_norm: grad.norm(),
            error_to_truth: config.truth.as_ref().map(|t| (point.q() - t).norm()),
            orth_deviation: point.orthogonality_deviation(),
            elapsed_s: clock.elapsed().as_secs_f64(),
            hessian_shift: pending_shift.take(),
        });
        if grad.norm() <= config.grad_tol {
            stop = StopReason::GradientTolerance;
            break;
        }
        if iter == config.max_iters {
            break;
        }

        let step_result = match algorithm {
            Algorithm::CayleySd | Algorithm::GeodesicSd => {
                let direction = -grad.block();
                step_along(
                    obj, &point, f, &grad, direction, is_cayley, config,
                    &prev_grad, &prev_step, &mut prev_alpha,
                )
            }
            Algorithm::Newton => newton_step(obj, &point).and_then(|ns| {
                pending_shift = ns.shift;
                let step = ns.direction.into_block();
                let next = advance(&point, &step, false)?;
                Ok((step, next))
            }),
            Algorithm::Cg => {
                let g = grad.block();
                let mut direction = None;
                if cg_since_reset < cg_reset_period {
                    if let (Some(p_old), Some(g_old)) = (&cg_dir, &prev_grad) {
                        let beta = conjugate_beta(config.cg_beta, g, g_old, p_old);
                        let candidate = -g + p_old * beta;
                        // Keep the conjugate direction only if it descends.
                        if 2.0 * g.dot(&candidate) < 0.0 {
                            direction = Some(candidate);
                        }
                    }
                }
                let direction = match direction {
                    Some(d) => d,
                    None => {
                        cg_since_reset = 0;
                        -g
                    }
                };
                cg_since_reset += 1;
                let result = step_along(
                    obj, &point, f, &grad, direction.clone(), false, config,
                    &prev_grad, &prev_step, &mut prev_alpha,
                );
                cg_dir = Some(direction);
                result
            }
            Algorithm::Lbfgs => {
                let mut direction = lbfgs_direction(grad.block(), &history);
                if 2.0 * grad.block().dot(&direction) >= 0.0 {
                    direction = -grad.block();
                }
                match config.line_search {
                    LineSearch::Bb => {
                        // The quasi-Newton step is taken raw.
                        advance(&point, &direction, false).map(|next| (direction, next))
                    }
                    LineSearch::Armijo(params) => {
                        let slope = 2.0 * grad.block().dot(&direction);
                        backtrack(f, slope, &params, |a| {
                            let trial = &direction * a;
                            let pt = advance(&point, &trial, false)?;
                            let value = obj.value(&pt);
                            Ok((pt, value))
                        })
                        .map(|(alpha, next, _)| (direction * alpha, next))
                    }
                }
            }
        };

        let (step, next) = match step_result {
            Ok(pair) => pair,
            Err(GrassmannError::LineSearchExhausted { .. }) => {
                stop = StopReason::NoProgress;
                break;
            }
            Err(e) => return Err(e.at_iteration(iter)),
        };

        prev_grad = Some(grad.block().clone());
        prev_step = Some(step);
        point = next;
    }

    let converged = stop == StopReason::GradientTolerance;
    Ok(SolverOutcome {
        point,
        trace,
        converged,
        stop,
    })
}

/// Chooses a step size along `direction` (Barzilai-Borwein or Armijo) and
/// advances the point; shared by the steepest-descent variants and CG.
#[allow(clippy::too_many_arguments)]
fn step_along(
    obj: &Objective,
    point: &InvolutionPoint,
    f0: f64,
    grad: &TangentVector,
    direction: DMatrix<f64>,
    cayley: bool,
    config: &SolverConfig,
    prev_grad: &Option<DMatrix<f64>>,
    prev_step: &Option<DMatrix<f64>>,
    prev_alpha: &mut f64,
) -> Result<(DMatrix<f64>, InvolutionPoint)> {
    match config.line_search {
        LineSearch::Bb => {
            let alpha = match (prev_grad, prev_step) {
                (Some(g_old), Some(s_old)) => bb_stepsize(
                    grad.block(),
                    g_old,
                    s_old,
                    config.bb_variant,
                    config.bb_clamp,
                    *prev_alpha,
                ),
                _ => 1.0,
            };
            *prev_alpha = alpha;
            let step = direction * alpha;
            let next = advance(point, &step, cayley)?;
            Ok((step, next))
        }
        LineSearch::Armijo(params) => {
            let slope = 2.0 * grad.block().dot(&direction);
            let (alpha, next, _) = backtrack(f0, slope, &params, |a| {
                let trial = &direction * a;
                let pt = advance(point, &trial, cayley)?;
                let value = obj.value(&pt);
                Ok((pt, value))
            })?;
            *prev_alpha = alpha;
            Ok((direction * alpha, next))
        }
    }
}
