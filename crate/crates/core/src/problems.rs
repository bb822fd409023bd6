//! Benchmark objectives: the linear trace functional, subspace Procrustes,
//! and the Karcher mean, each with a closed-form minimizer where one
//! exists.

use crate::calculus::Objective;
use crate::geometry::{connecting_tangent, distance, geodesic, log_map};
use crate::point::{sorted_symmetric_eigen, symmetrize, InvolutionPoint};
use crate::{GrassmannDims, GrassmannError, Result, EIG_GAP_TOL};
use nalgebra::DMatrix;

/// The trace objective f(Q) = tr(F·Q) for a symmetric matrix F.
///
/// Its minimizer puts the +1-eigenspace on the k smallest eigendirections
/// of F, so minimizing it is equivalent to computing the invariant subspace
/// at the bottom of F's spectrum.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    dims: GrassmannDims,
    f: DMatrix<f64>,
}

impl QuadraticProblem {
    /// Stores F symmetrized; rejects shape mismatches.
    pub fn new(dims: GrassmannDims, f: DMatrix<f64>) -> Result<Self> {
        let n = dims.n();
        if f.shape() != (n, n) {
            return Err(GrassmannError::InvalidDimensions(format!(
                "cost matrix is {}x{}, expected {n}x{n}",
                f.nrows(),
                f.ncols()
            )));
        }
        Ok(QuadraticProblem {
            dims,
            f: symmetrize(&f),
        })
    }

    pub fn dims(&self) -> GrassmannDims {
        self.dims
    }

    pub fn cost_matrix(&self) -> &DMatrix<f64> {
        &self.f
    }

    /// The objective with its constant Euclidean gradient F and vanishing
    /// second derivative (the manifold Hessian is pure curvature).
    pub fn objective(&self) -> Objective {
        let f_value = self.f.clone();
        let f_grad = self.f.clone();
        let n = self.dims.n();
        Objective::new(move |q| f_value.dot(q.q()))
            .with_euclidean_gradient(move |_| f_grad.clone())
            .with_second_derivative(move |_, _| DMatrix::zeros(n, n))
    }

    /// The exact minimizer (+1-eigenspace on the k smallest eigendirections
    /// of F) and its objective value.
    pub fn closed_minimizer(&self) -> Result<(InvolutionPoint, f64)> {
        let (n, k, m) = (self.dims.n(), self.dims.k(), self.dims.complement());
        let (values, vectors) = sorted_symmetric_eigen(&self.f);
        if k > 0 && m > 0 {
            let gap = values[m - 1] - values[m];
            if gap <= EIG_GAP_TOL {
                return Err(GrassmannError::DegenerateGap { position: m, gap });
            }
        }
        let mut v = DMatrix::<f64>::zeros(n, n);
        for j in 0..k {
            v.set_column(j, &vectors.column(n - 1 - j));
        }
        for j in 0..m {
            v.set_column(k + j, &vectors.column(j));
        }
        let minimizer = InvolutionPoint::from_eigenbasis(self.dims, v)?;
        let f_star = self.f.dot(minimizer.q());
        Ok((minimizer, f_star))
    }

    /// Newton step for this objective via the Sylvester equation
    /// A·S − S·C = 2G with A = YᵀFY, C = ZᵀFZ, G = YᵀFZ, solved in the
    /// eigenbases of A and C. Provides an independent cross-check of the
    /// assembled-Hessian Newton step.
    pub fn newton_sylvester(&self, q: &InvolutionPoint) -> Result<DMatrix<f64>> {
        let y = q.subspace_basis();
        let z = q.complement_basis();
        let a = symmetrize(&(y.transpose() * &self.f * &y));
        let c = symmetrize(&(z.transpose() * &self.f * &z));
        let g = y.transpose() * &self.f * &z;
        let (a_vals, a_vecs) = sorted_symmetric_eigen(&a);
        let (c_vals, c_vecs) = sorted_symmetric_eigen(&c);
        let g_tilde = a_vecs.transpose() * &g * &c_vecs;
        let scale = a_vals
            .iter()
            .chain(c_vals.iter())
            .fold(1.0f64, |acc, v| acc.max(v.abs()));
        let mut s_tilde = g_tilde;
        for p in 0..s_tilde.nrows() {
            for r in 0..s_tilde.ncols() {
                let denom = a_vals[p] - c_vals[r];
                if denom.abs() <= 1e-12 * scale {
                    return Err(GrassmannError::LinearSolve(format!(
                        "spectra of the Sylvester operator overlap: a[{p}] - c[{r}] = {denom:.3e}"
                    )));
                }
                s_tilde[(p, r)] = 2.0 * s_tilde[(p, r)] / denom;
            }
        }
        Ok(a_vecs * s_tilde * c_vecs.transpose())
    }
}

/// The subspace Procrustes objective: minimize ‖A − B·Q‖_F over the
/// manifold. The value handed to solvers is the expanded square
/// ‖A‖² + ‖B‖² − tr((AᵀB + BᵀA)Q), whose Euclidean gradient is the
/// constant −(AᵀB + BᵀA); [`ProcrustesProblem::residual`] reports the
/// unsquared misfit.
#[derive(Debug, Clone)]
pub struct ProcrustesProblem {
    dims: GrassmannDims,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    /// AᵀB + BᵀA, symmetric.
    m: DMatrix<f64>,
    constant: f64,
}

impl ProcrustesProblem {
    pub fn new(dims: GrassmannDims, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = dims.n();
        if a.shape() != (n, n) || b.shape() != (n, n) {
            return Err(GrassmannError::InvalidDimensions(format!(
                "data matrices are {}x{} and {}x{}, expected {n}x{n}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let m = symmetrize(&(a.transpose() * &b + b.transpose() * &a));
        let constant = a.norm_squared() + b.norm_squared();
        Ok(ProcrustesProblem { dims, a, b, m, constant })
    }

    pub fn dims(&self) -> GrassmannDims {
        self.dims
    }

    /// The misfit ‖A − B·Q‖_F itself.
    pub fn residual(&self, q: &InvolutionPoint) -> f64 {
        (&self.a - &self.b * q.q()).norm()
    }

    pub fn objective(&self) -> Objective {
        let m_value = self.m.clone();
        let m_grad = self.m.clone();
        let constant = self.constant;
        let n = self.dims.n();
        Objective::new(move |q| constant - m_value.dot(q.q()))
            .with_euclidean_gradient(move |_| -&m_grad)
            .with_second_derivative(move |_, _| DMatrix::zeros(n, n))
    }

    /// The exact minimizer: +1-eigenspace on the k largest eigendirections
    /// of (AᵀB + BᵀA)/2.
    pub fn closed_minimizer(&self) -> Result<InvolutionPoint> {
        let (n, k, _m) = (self.dims.n(), self.dims.k(), self.dims.complement());
        let (values, vectors) = sorted_symmetric_eigen(&self.m);
        if k > 0 && k < n {
            let gap = values[k - 1] - values[k];
            if gap <= EIG_GAP_TOL {
                return Err(GrassmannError::DegenerateGap { position: k, gap });
            }
        }
        InvolutionPoint::from_eigenbasis(self.dims, vectors)
    }
}

/// The Karcher mean objective: minimize the sum of squared geodesic
/// distances to a fixed set of anchor points.
#[derive(Debug, Clone)]
pub struct KarcherProblem {
    dims: GrassmannDims,
    anchors: Vec<InvolutionPoint>,
}

impl KarcherProblem {
    /// Requires at least one anchor, all of the same dimensions, with every
    /// anchor pair strictly inside each other's log domain so the gradient
    /// stays well defined between them.
    pub fn new(dims: GrassmannDims, anchors: Vec<InvolutionPoint>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(GrassmannError::InvalidDimensions(
                "at least one anchor point is required".into(),
            ));
        }
        for anchor in &anchors {
            if anchor.dims() != dims {
                return Err(GrassmannError::Mismatch(format!(
                    "anchor on Gr({}, {}) does not match Gr({}, {})",
                    anchor.dims().k(),
                    anchor.dims().n(),
                    dims.k(),
                    dims.n()
                )));
            }
        }
        for i in 0..anchors.len() {
            for j in (i + 1)..anchors.len() {
                connecting_tangent(&anchors[i], &anchors[j])?;
            }
        }
        Ok(KarcherProblem { dims, anchors })
    }

    pub fn dims(&self) -> GrassmannDims {
        self.dims
    }

    pub fn anchors(&self) -> &[InvolutionPoint] {
        &self.anchors
    }

    /// The objective Σⱼ d²(Q, Qⱼ) with its Riemannian gradient
    /// −2·Σⱼ log_Q(Qⱼ) supplied directly as a tangent block. There is no
    /// Euclidean extension and no Hessian, so Newton's method does not
    /// apply.
    pub fn objective(&self) -> Objective {
        let anchors_value = self.anchors.clone();
        let anchors_grad = self.anchors.clone();
        let (k, m) = (self.dims.k(), self.dims.complement());
        Objective::new(move |q| {
            anchors_value
                .iter()
                .map(|anchor| {
                    let d = distance(q, anchor).expect("anchor dimensions verified at construction");
                    d * d
                })
                .sum()
        })
        .with_gradient_hook(move |q| {
            let mut sum = DMatrix::<f64>::zeros(k, m);
            for anchor in &anchors_grad {
                sum += log_map(q, anchor)?.block();
            }
            Ok(sum * -2.0)
        })
    }
}

/// The Fréchet mean of two points: the midpoint of the connecting
/// geodesic.
pub fn frechet_mean_two_points(a: &InvolutionPoint, b: &InvolutionPoint) -> Result<InvolutionPoint> {
    let tangent = connecting_tangent(a, b)?;
    Ok(geodesic(&tangent, 0.5))
}
