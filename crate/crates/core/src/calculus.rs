//! Riemannian gradients, Hessians, and Newton steps for objectives given by
//! Euclidean derivatives.
//!
//! An objective supplies its value and, optionally, its Euclidean gradient
//! `f_Q` (the n×n matrix of partials with respect to the entries of Q), a
//! second-derivative action `X ↦ f_QQ(X)` (the directional derivative of the
//! gradient field), and a direct Riemannian gradient hook for objectives
//! whose gradient is naturally a tangent block.
//!
//! With the eigenbasis partition `Vᵀ(f_Q + f_Qᵀ)V = [[A, 2G], [2Gᵀ, C]]`,
//! the Riemannian gradient is the tangent vector with block `G`, and the
//! Hessian acts on a block `S` as
//!
//! ```text
//! (H·S)  =  f_QQ part  +  ½(S·C - A·S),
//! ```
//!
//! a k(n-k)×k(n-k) symmetric matrix once the blocks are flattened row-major.
//! The Newton equation solved here is `H·vec(S) = -2·vec(G)`; the factor 2
//! balances the metric `⟨X, Y⟩ = 2·tr(BᵀC)` against the plain Frobenius
//! pairing used to assemble `H`.

use crate::geometry::{geodesic, TangentVector};
use crate::point::{symmetrize, InvolutionPoint};
use crate::{GrassmannError, Result};
use nalgebra::{DMatrix, DVector};

type ValueFn = dyn Fn(&InvolutionPoint) -> f64;
type GradFn = dyn Fn(&InvolutionPoint) -> DMatrix<f64>;
type SecondFn = dyn Fn(&InvolutionPoint, &DMatrix<f64>) -> DMatrix<f64>;
type HookFn = dyn Fn(&InvolutionPoint) -> Result<DMatrix<f64>>;

/// An objective function on the manifold, described by callbacks.
pub struct Objective {
    value: Box<ValueFn>,
    euclid_grad: Option<Box<GradFn>>,
    second_action: Option<Box<SecondFn>>,
    gradient_hook: Option<Box<HookFn>>,
}

impl Objective {
    /// An objective with only a value; derivatives can be attached with the
    /// builder methods.
    pub fn new(value: impl Fn(&InvolutionPoint) -> f64 + 'static) -> Self {
        Objective {
            value: Box::new(value),
            euclid_grad: None,
            second_action: None,
            gradient_hook: None,
        }
    }

    /// Attaches the Euclidean gradient f_Q.
    pub fn with_euclidean_gradient(
        mut self,
        grad: impl Fn(&InvolutionPoint) -> DMatrix<f64> + 'static,
    ) -> Self {
        self.euclid_grad = Some(Box::new(grad));
        self
    }

    /// Attaches the second-derivative action X ↦ f_QQ(X) on ambient
    /// directions.
    pub fn with_second_derivative(
        mut self,
        action: impl Fn(&InvolutionPoint, &DMatrix<f64>) -> DMatrix<f64> + 'static,
    ) -> Self {
        self.second_action = Some(Box::new(action));
        self
    }

    /// Attaches a hook that produces the Riemannian gradient block directly,
    /// bypassing the Euclidean partition. Used by objectives (like the sum
    /// of squared distances) whose natural derivative is already tangent.
    pub fn with_gradient_hook(
        mut self,
        hook: impl Fn(&InvolutionPoint) -> Result<DMatrix<f64>> + 'static,
    ) -> Self {
        self.gradient_hook = Some(Box::new(hook));
        self
    }

    pub fn value(&self, q: &InvolutionPoint) -> f64 {
        (self.value)(q)
    }

    pub fn euclidean_gradient(&self, q: &InvolutionPoint) -> Result<DMatrix<f64>> {
        match &self.euclid_grad {
            Some(g) => Ok(g(q)),
            None => Err(GrassmannError::MissingCallback("euclidean gradient")),
        }
    }

    pub fn second_derivative_action(
        &self,
        q: &InvolutionPoint,
        x_ambient: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        match &self.second_action {
            Some(h) => Ok(h(q, x_ambient)),
            None => Err(GrassmannError::MissingCallback("second derivative action")),
        }
    }

    pub fn has_second_derivative(&self) -> bool {
        self.second_action.is_some()
    }

    pub fn has_gradient(&self) -> bool {
        self.euclid_grad.is_some() || self.gradient_hook.is_some()
    }
}

/// The Riemannian gradient at `q`: the gradient hook's block when one is
/// attached, otherwise `G = ½·Yᵀ(f_Q + f_Qᵀ)Z` from the Euclidean gradient.
pub fn riemannian_gradient(obj: &Objective, q: &InvolutionPoint) -> Result<TangentVector> {
    if let Some(hook) = &obj.gradient_hook {
        return TangentVector::from_block(q, hook(q)?);
    }
    let fq = obj.euclidean_gradient(q)?;
    let y = q.subspace_basis();
    let z = q.complement_basis();
    let block = 0.5 * (y.transpose() * &fq * &z + (z.transpose() * &fq * &y).transpose());
    TangentVector::from_block(q, block)
}

/// The partition blocks A = Yᵀ(f_Q+f_Qᵀ)Y and C = Zᵀ(f_Q+f_Qᵀ)Z entering
/// the Hessian's curvature term.
fn partition_ac(obj: &Objective, q: &InvolutionPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let fq = obj.euclidean_gradient(q)?;
    let s = &fq + fq.transpose();
    let y = q.subspace_basis();
    let z = q.complement_basis();
    Ok((y.transpose() * &s * &y, z.transpose() * &s * &z))
}

/// The Hessian as a bilinear form on two tangent vectors at `q`:
///
/// ```text
/// ∇²f(X, Y) = tr(f_QQ(X)ᵀ·Y) - ½·tr(f_Qᵀ·Q·(XY + YX)).
/// ```
pub fn hessian_bilinear(
    obj: &Objective,
    q: &InvolutionPoint,
    x: &TangentVector,
    y: &TangentVector,
) -> Result<f64> {
    let xa = x.ambient();
    let ya = y.ambient();
    let fqq_x = obj.second_derivative_action(q, &xa)?;
    let fq = obj.euclidean_gradient(q)?;
    let first = fqq_x.dot(&ya);
    let mixed = q.q() * (&xa * &ya + &ya * &xa);
    let second = 0.5 * fq.dot(&mixed);
    Ok(first - second)
}

/// The Hessian assembled as a symmetric k(n-k)×k(n-k) matrix over
/// row-major-flattened tangent blocks.
#[derive(Debug, Clone)]
pub struct HessianMatrix {
    k: usize,
    m: usize,
    matrix: DMatrix<f64>,
}

impl HessianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Applies the Hessian to a tangent block.
    pub fn apply(&self, block: &DMatrix<f64>) -> DMatrix<f64> {
        let v = self.matrix() * flatten(block);
        unflatten(&v, self.k, self.m)
    }
}

/// Row-major flattening of a k×m block, pairing index (i, j) with row
/// i·m + j of the vector.
fn flatten(block: &DMatrix<f64>) -> DVector<f64> {
    let (k, m) = block.shape();
    DVector::from_fn(k * m, |idx, _| block[(idx / m, idx % m)])
}

fn unflatten(v: &DVector<f64>, k: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, m, |i, j| v[i * m + j])
}

/// Assembles the Hessian matrix column by column: the column for the basis
/// block E_ij (ambient yᵢzⱼᵀ + zⱼyᵢᵀ) is the flattened block
///
/// ```text
/// Yᵀ(f_QQ(X_ij) + f_QQ(X_ij)ᵀ)Z + ½(E_ij·C - A·E_ij).
/// ```
///
/// The result is symmetrized after an explicit symmetry check, so callers
/// get an exactly symmetric matrix.
pub fn assemble_hessian(obj: &Objective, q: &InvolutionPoint) -> Result<HessianMatrix> {
    let dims = q.dims();
    let (k, m) = (dims.k(), dims.complement());
    let dim = k * m;
    let (a, c) = partition_ac(obj, q)?;
    let y = q.subspace_basis();
    let z = q.complement_basis();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..k {
        for j in 0..m {
            let x_amb = y.column(i) * z.column(j).transpose()
                + z.column(j) * y.column(i).transpose();
            let fqq = obj.second_derivative_action(q, &x_amb)?;
            let mut col_block = y.transpose() * (&fqq + fqq.transpose()) * &z;
            // Curvature term ½(E_ij·C - A·E_ij): E_ij·C places row j of C
            // into row i; A·E_ij places column i of A into column j.
            for jj in 0..m {
                col_block[(i, jj)] += 0.5 * c[(j, jj)];
            }
            for ii in 0..k {
                col_block[(ii, j)] -= 0.5 * a[(ii, i)];
            }
            h.set_column(i * m + j, &flatten(&col_block));
        }
    }
    let asym = (&h - h.transpose()).norm();
    if asym > 1e-10 * h.norm().max(1.0) {
        return Err(GrassmannError::Mismatch(format!(
            "assembled Hessian is not symmetric (deviation {asym:.3e})"
        )));
    }
    Ok(HessianMatrix {
        k,
        m,
        matrix: symmetrize(&h),
    })
}

/// A Newton direction: the tangent solving the Newton equation, and the
/// Levenberg shift that was added to the Hessian when it was not positive
/// definite.
pub struct NewtonStep {
    pub direction: TangentVector,
    pub shift: Option<f64>,
}

/// Solves `H·vec(S) = -2·vec(G)` for the Newton direction at `q`. When `H`
/// is not positive definite, a shift of `max(0, -λ_min) + 1e-8` is added to
/// its diagonal (and reported), turning the step into a damped one.
pub fn newton_step(obj: &Objective, q: &InvolutionPoint) -> Result<NewtonStep> {
    let grad = riemannian_gradient(obj, q)?;
    let hess = assemble_hessian(obj, q)?;
    let rhs = -2.0 * flatten(grad.block());
    let dim = rhs.len();
    if dim == 0 {
        return Ok(NewtonStep {
            direction: TangentVector::zero(q),
            shift: None,
        });
    }

    let solved = hess
        .matrix()
        .clone()
        .cholesky()
        .map(|ch| (ch.solve(&rhs), None));
    let (solution, shift) = match solved {
        Some(ok) => ok,
        None => {
            let eigenvalues = hess.matrix().clone().symmetric_eigen().eigenvalues;
            let lambda_min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let shift = (-lambda_min).max(0.0) + 1e-8;
            let shifted = hess.matrix() + DMatrix::<f64>::identity(dim, dim) * shift;
            let sol = match shifted.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => shifted.lu().solve(&rhs).ok_or_else(|| {
                    GrassmannError::LinearSolve("shifted Hessian solve failed".into())
                })?,
            };
            (sol, Some(shift))
        }
    };
    let k = q.dims().k();
    let m = q.dims().complement();
    Ok(NewtonStep {
        direction: TangentVector::from_block(q, unflatten(&solution, k, m))?,
        shift,
    })
}

/// Largest mismatch between `⟨grad f, X⟩` and a central finite difference of
/// the value along the geodesic through each probe direction, normalized by
/// the scale of the derivative.
pub fn fd_gradient_error(
    obj: &Objective,
    q: &InvolutionPoint,
    probes: &[TangentVector],
    step: f64,
) -> Result<f64> {
    let grad = riemannian_gradient(obj, q)?;
    let mut worst = 0.0f64;
    for x in probes {
        let analytic = grad.inner(x)?;
        let plus = obj.value(&geodesic(x, step));
        let minus = obj.value(&geodesic(x, -step));
        let numeric = (plus - minus) / (2.0 * step);
        let scale = analytic.abs().max(numeric.abs()).max(1.0);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    Ok(worst)
}

/// Largest mismatch between the Hessian quadratic form `∇²f(X, X)` and a
/// second central difference of the value along each probe's geodesic,
/// normalized by the scale of the form.
pub fn fd_hessian_error(
    obj: &Objective,
    q: &InvolutionPoint,
    probes: &[TangentVector],
    step: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    let f0 = obj.value(q);
    for x in probes {
        let analytic = hessian_bilinear(obj, q, x, x)?;
        let plus = obj.value(&geodesic(x, step));
        let minus = obj.value(&geodesic(x, -step));
        let numeric = (plus - 2.0 * f0 + minus) / (step * step);
        let scale = analytic.abs().max(numeric.abs()).max(1.0);
        worst = worst.max((analytic - numeric).abs() / scale);
    }
    Ok(worst)
}
