//! Points of Gr(k, n) in the involution model.
//!
//! A subspace is encoded by the symmetric orthogonal matrix `Q` that acts as
//! +1 on the subspace and -1 on its orthogonal complement; `tr Q = 2k - n`.
//! Every point caches an orthogonal eigenbasis `V` with
//! `Q = V · I_{k,n-k} · Vᵀ`, where `I_{k,n-k} = diag(I_k, -I_{n-k})`. The
//! first k columns of `V` form an orthonormal basis of the subspace and the
//! remaining columns span the complement. All geometry downstream works on
//! small blocks expressed in this basis.

use crate::qr;
use crate::{GrassmannError, Result, EIG_GAP_TOL, TOL_ORTH};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Dimension pair (n, k) of the Grassmannian of k-planes in R^n.
///
/// The degenerate cases k = 0 and k = n are allowed; they are single-point
/// manifolds (Q = -I and Q = I respectively) and every operation treats them
/// as such.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrassmannDims {
    n: usize,
    k: usize,
}

impl GrassmannDims {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(GrassmannError::InvalidDimensions(
                "ambient dimension n must be positive".into(),
            ));
        }
        if k > n {
            return Err(GrassmannError::InvalidDimensions(format!(
                "subspace dimension k = {k} exceeds ambient dimension n = {n}"
            )));
        }
        Ok(GrassmannDims { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Dimension of the orthogonal complement, n - k.
    pub fn complement(&self) -> usize {
        self.n - self.k
    }

    /// Trace that every involution point must have: 2k - n.
    pub fn signature_trace(&self) -> f64 {
        2.0 * self.k as f64 - self.n as f64
    }

    /// Dimensions of the complementary Grassmannian Gr(n-k, n).
    pub fn complementary(&self) -> GrassmannDims {
        GrassmannDims {
            n: self.n,
            k: self.n - self.k,
        }
    }

    /// The signature matrix I_{k,n-k} = diag(I_k, -I_{n-k}).
    pub fn signature_matrix(&self) -> DMatrix<f64> {
        let mut s = DMatrix::<f64>::identity(self.n, self.n);
        for i in self.k..self.n {
            s[(i, i)] = -1.0;
        }
        s
    }
}

/// Symmetric part of a square matrix; exact symmetry by construction.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..=i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Symmetric eigendecomposition with eigenvalues sorted descending; ties keep
/// the solver's original order, so the output is deterministic.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a real symmetric matrix are finite")
    });
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Builds Q = V · I_{k,n-k} · Vᵀ = Y·Yᵀ - Z·Zᵀ, exactly symmetric.
pub(crate) fn involution_from_basis(dims: GrassmannDims, v: &DMatrix<f64>) -> DMatrix<f64> {
    let y = v.columns(0, dims.k());
    let z = v.columns(dims.k(), dims.complement());
    let q = &y * y.transpose() - &z * z.transpose();
    symmetrize(&q)
}

/// A point of Gr(k, n): the involution matrix together with a cached
/// eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct InvolutionPoint {
    dims: GrassmannDims,
    q: DMatrix<f64>,
    v: DMatrix<f64>,
}

impl InvolutionPoint {
    /// Builds a point from an orthogonal eigenbasis whose first k columns
    /// span the subspace.
    pub fn from_eigenbasis(dims: GrassmannDims, v: DMatrix<f64>) -> Result<Self> {
        if v.nrows() != dims.n() || v.ncols() != dims.n() {
            return Err(GrassmannError::InvalidDimensions(format!(
                "eigenbasis is {}x{}, expected {}x{}",
                v.nrows(),
                v.ncols(),
                dims.n(),
                dims.n()
            )));
        }
        let dev = (v.transpose() * &v - DMatrix::identity(dims.n(), dims.n())).norm();
        if dev > TOL_ORTH {
            return Err(GrassmannError::NotOrthogonal { deviation: dev });
        }
        let q = involution_from_basis(dims, &v);
        Ok(InvolutionPoint { dims, q, v })
    }

    /// Builds a point from a matrix claimed to be an involution point,
    /// verifying symmetry, orthogonality, and trace before extracting the
    /// eigenbasis.
    pub fn from_matrix(dims: GrassmannDims, q: DMatrix<f64>) -> Result<Self> {
        let v = eigenbasis_from_involution(dims, &q)?;
        Ok(InvolutionPoint { dims, q, v })
    }

    /// Internal constructor for callers that built `q` and `v` consistently.
    pub(crate) fn from_parts(dims: GrassmannDims, q: DMatrix<f64>, v: DMatrix<f64>) -> Self {
        InvolutionPoint { dims, q, v }
    }

    pub fn dims(&self) -> GrassmannDims {
        self.dims
    }

    /// The involution matrix Q.
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// The cached eigenbasis V with Q = V·I_{k,n-k}·Vᵀ.
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Orthonormal basis of the subspace: the first k columns of V.
    pub fn subspace_basis(&self) -> DMatrix<f64> {
        self.v.columns(0, self.dims.k()).into_owned()
    }

    /// Orthonormal basis of the complement: the last n-k columns of V.
    pub fn complement_basis(&self) -> DMatrix<f64> {
        self.v
            .columns(self.dims.k(), self.dims.complement())
            .into_owned()
    }

    /// Largest violation among the five structural invariants: Q symmetric,
    /// Q orthogonal, tr Q = 2k-n, V orthogonal, Q = V·I_{k,n-k}·Vᵀ.
    pub fn invariant_deviation(&self) -> f64 {
        let n = self.dims.n();
        let id = DMatrix::<f64>::identity(n, n);
        let sym = (&self.q - self.q.transpose()).norm();
        let orth = (self.q.transpose() * &self.q - &id).norm();
        let trace = (self.q.trace() - self.dims.signature_trace()).abs();
        let v_orth = (self.v.transpose() * &self.v - &id).norm();
        let recon = (involution_from_basis(self.dims, &self.v) - &self.q).norm();
        sym.max(orth).max(trace).max(v_orth).max(recon)
    }

    /// Deviation ‖Q² - I‖_F from being an involution; the feasibility
    /// measure reported in solver traces.
    pub fn orthogonality_deviation(&self) -> f64 {
        let n = self.dims.n();
        (&self.q * &self.q - DMatrix::<f64>::identity(n, n)).norm()
    }

    /// The corresponding point of Gr(n-k, n) under Q ↦ -Q, with the
    /// eigenbasis blocks swapped accordingly.
    pub fn negated(&self) -> InvolutionPoint {
        let dims = self.dims.complementary();
        let mut v = DMatrix::zeros(self.dims.n(), self.dims.n());
        v.columns_mut(0, self.dims.complement())
            .copy_from(&self.v.columns(self.dims.k(), self.dims.complement()));
        v.columns_mut(self.dims.complement(), self.dims.k())
            .copy_from(&self.v.columns(0, self.dims.k()));
        InvolutionPoint::from_parts(dims, -&self.q, v)
    }
}

/// Extracts an orthogonal eigenbasis V with Q = V·I_{k,n-k}·Vᵀ from an
/// involution point, using k steps of column-pivoted Householder QR on the
/// projector (I + Q)/2. No general eigensolver is involved; the projector
/// has exact rank k, and pivoting keeps the factorization stable while the
/// reflector sign convention fixes the gauge (Q = I_{k,n-k} yields V = I).
pub fn eigenbasis_from_involution(dims: GrassmannDims, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = dims.n();
    if q.nrows() != n || q.ncols() != n {
        return Err(GrassmannError::InvalidDimensions(format!(
            "matrix is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    let check_tol = 100.0 * TOL_ORTH;
    let sym = (q - q.transpose()).norm();
    if sym > check_tol {
        return Err(GrassmannError::NotInvolution {
            what: "symmetry",
            deviation: sym,
        });
    }
    let orth = (q.transpose() * q - DMatrix::<f64>::identity(n, n)).norm();
    if orth > check_tol {
        return Err(GrassmannError::NotInvolution {
            what: "orthogonality",
            deviation: orth,
        });
    }
    let trace = (q.trace() - dims.signature_trace()).abs();
    if trace > check_tol {
        return Err(GrassmannError::NotInvolution {
            what: "trace",
            deviation: trace,
        });
    }
    let mut p = q.clone();
    for i in 0..n {
        p[(i, i)] += 1.0;
    }
    p.scale_mut(0.5);
    Ok(qr::householder_qr(&p, dims.k(), true).q)
}

/// Projects an arbitrary square matrix onto the manifold: the nearest
/// involution point keeps the k leading eigendirections of the symmetric
/// part as the subspace. Fails when the eigenvalue gap at the split is
/// below [`EIG_GAP_TOL`], since the answer is then not unique.
pub fn project_to_manifold(dims: GrassmannDims, a: &DMatrix<f64>) -> Result<InvolutionPoint> {
    let n = dims.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(GrassmannError::InvalidDimensions(format!(
            "matrix is {}x{}, expected {n}x{n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let (values, vectors) = sorted_symmetric_eigen(a);
    let k = dims.k();
    if k > 0 && k < n {
        let gap = values[k - 1] - values[k];
        if gap <= EIG_GAP_TOL {
            return Err(GrassmannError::DegenerateGap { position: k, gap });
        }
    }
    let q = involution_from_basis(dims, &vectors);
    Ok(InvolutionPoint::from_parts(dims, q, vectors))
}

/// A seeded random point: the orthogonal factor of a standard normal matrix
/// becomes the eigenbasis. Deterministic for a given (seed, n, k).
pub fn random_point(dims: GrassmannDims, seed: u64) -> InvolutionPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_point_with_rng(dims, &mut rng)
}

/// Draws a random point from an existing generator stream.
pub fn random_point_with_rng<R: rand::Rng>(dims: GrassmannDims, rng: &mut R) -> InvolutionPoint {
    let g = random_gaussian_matrix(dims.n(), dims.n(), rng);
    let v = qr::householder_qr(&g, dims.n(), false).q;
    let q = involution_from_basis(dims, &v);
    InvolutionPoint::from_parts(dims, q, v)
}

/// Standard normal matrix from the given generator, filled in row order.
pub fn random_gaussian_matrix<R: rand::Rng>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let normal = StandardNormal;
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = normal.sample(rng);
        }
    }
    m
}
