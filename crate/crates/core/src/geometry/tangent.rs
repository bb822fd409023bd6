//! Tangent vectors and the Riemannian metric.
//!
//! The tangent space at `Q` consists of the symmetric matrices that
//! anticommute with `Q`; in the eigenbasis `V` these are exactly
//! `V·[[0, B], [Bᵀ, 0]]·Vᵀ` for an arbitrary `k×(n-k)` block `B`. The metric
//! inherited from the Frobenius inner product is `⟨X, Y⟩ = 2·tr(BᵀC)`.

use crate::point::InvolutionPoint;
use crate::{GrassmannError, Result, TOL_ORTH};
use nalgebra::DMatrix;

/// A tangent vector, stored as its effective block together with a snapshot
/// of the base point whose eigenbasis the block refers to.
///
/// The block is gauge dependent: it only has meaning relative to the cached
/// `V` of its base point. Operations that combine two tangent vectors check
/// that their snapshots agree.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: InvolutionPoint,
    block: DMatrix<f64>,
}

impl TangentVector {
    /// Wraps an effective block at the given base point.
    pub fn from_block(base: &InvolutionPoint, block: DMatrix<f64>) -> Result<Self> {
        let (k, m) = (base.dims().k(), base.dims().complement());
        if block.nrows() != k || block.ncols() != m {
            return Err(GrassmannError::Mismatch(format!(
                "tangent block must be {k}x{m}, got {}x{}",
                block.nrows(),
                block.ncols()
            )));
        }
        Ok(Self {
            base: base.clone(),
            block,
        })
    }

    /// The zero vector at a base point.
    pub fn zero(base: &InvolutionPoint) -> Self {
        let (k, m) = (base.dims().k(), base.dims().complement());
        Self {
            base: base.clone(),
            block: DMatrix::zeros(k, m),
        }
    }

    /// Interprets an ambient n×n matrix as a tangent vector at `base`,
    /// failing if it does not lie in the tangent space to working precision.
    pub fn from_ambient(base: &InvolutionPoint, w: &DMatrix<f64>) -> Result<Self> {
        let n = base.dims().n();
        if w.nrows() != n || w.ncols() != n {
            return Err(GrassmannError::Mismatch(format!(
                "ambient tangent must be {n}x{n}, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        let vec = Self {
            base: base.clone(),
            block: extract_block(base, w),
        };
        let residual = (vec.ambient() - w).norm() / w.norm().max(1.0);
        if residual > 100.0 * TOL_ORTH {
            return Err(GrassmannError::NotOrthogonalTangent {
                deviation: residual,
            });
        }
        Ok(vec)
    }

    /// The base point the block refers to.
    pub fn base(&self) -> &InvolutionPoint {
        &self.base
    }

    /// The effective k×(n-k) block.
    pub fn block(&self) -> &DMatrix<f64> {
        &self.block
    }

    pub fn into_block(self) -> DMatrix<f64> {
        self.block
    }

    /// The ambient symmetric matrix V·[[0, B], [Bᵀ, 0]]·Vᵀ.
    pub fn ambient(&self) -> DMatrix<f64> {
        let y = self.base.subspace_basis();
        let z = self.base.complement_basis();
        let yb = y * &self.block;
        &yb * z.transpose() + z * yb.transpose()
    }

    /// Riemannian norm √2·‖B‖_F.
    pub fn norm(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.block.norm()
    }

    /// Riemannian inner product 2·tr(BᵀC) with another vector at the same
    /// base point (same eigenbasis snapshot).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        check_same_base(&self.base, &other.base)?;
        Ok(2.0 * self.block.dot(&other.block))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            base: self.base.clone(),
            block: &self.block * factor,
        }
    }

    /// Componentwise `self + factor · other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        check_same_base(&self.base, &other.base)?;
        Ok(Self {
            base: self.base.clone(),
            block: &self.block + factor * &other.block,
        })
    }

    /// Whether every block entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.block.iter().all(|&x| x == 0.0)
    }
}

/// Extracts the effective block Yᵀ·W·Z of an ambient matrix.
fn extract_block(base: &InvolutionPoint, w: &DMatrix<f64>) -> DMatrix<f64> {
    let y = base.subspace_basis();
    let z = base.complement_basis();
    y.transpose() * w * z
}

fn check_same_base(a: &InvolutionPoint, b: &InvolutionPoint) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(GrassmannError::Mismatch(format!(
            "tangent vectors live on different manifolds: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let gap = (a.v() - b.v()).norm();
    if gap > TOL_ORTH {
        return Err(GrassmannError::Mismatch(format!(
            "tangent vectors refer to different eigenbases (deviation {gap:.3e})"
        )));
    }
    Ok(())
}

/// Verifies that `w` lies in the shell Q·(skew), the ambient tangent space
/// of the orthogonal group translated to Q.
fn check_shell(base: &InvolutionPoint, w: &DMatrix<f64>) -> Result<()> {
    let lambda = base.q() * w;
    let deviation = (&lambda + lambda.transpose()).norm() / w.norm().max(1.0);
    if deviation > 100.0 * TOL_ORTH {
        return Err(GrassmannError::NotOrthogonalTangent { deviation });
    }
    Ok(())
}

/// Projects an ambient matrix of the form W = Q·Λ (Λ skew) onto the tangent
/// space: ½(W - Q·W·Q).
pub fn project_tangent(base: &InvolutionPoint, w: &DMatrix<f64>) -> Result<TangentVector> {
    let n = base.dims().n();
    if w.nrows() != n || w.ncols() != n {
        return Err(GrassmannError::Mismatch(format!(
            "expected {n}x{n} ambient matrix, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    check_shell(base, w)?;
    let t = 0.5 * (w - base.q() * w * base.q());
    Ok(TangentVector {
        base: base.clone(),
        block: extract_block(base, &t),
    })
}

/// The complementary projection onto the normal space: ½(W + Q·W·Q), for
/// W = Q·Λ with Λ skew.
pub fn project_normal(base: &InvolutionPoint, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = base.dims().n();
    if w.nrows() != n || w.ncols() != n {
        return Err(GrassmannError::Mismatch(format!(
            "expected {n}x{n} ambient matrix, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    check_shell(base, w)?;
    Ok(0.5 * (w + base.q() * w * base.q()))
}
