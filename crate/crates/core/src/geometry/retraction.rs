//! Retractions and their vector transports.
//!
//! Retractions are cheaper stand-ins for the exponential map: first-order
//! accurate moves along a tangent direction that stay exactly on the
//! manifold. Three are provided, each with the vector transport it induces:
//!
//! - `Eigen`: project `Q + X` back onto the manifold through a symmetric
//!   eigendecomposition. For a genuine tangent `X` the spectral gap of
//!   `Q + X` is at least 2 (the eigenvalues pair up as ±√(1+σᵢ²)), so the
//!   projection is always well defined, but an EVD is the costliest option.
//! - `Qr`: orthonormalize the moved subspace with the first k Householder
//!   steps of a 2×2 block QR factorization. With the sign convention of the
//!   QR layer, a zero step factors to the identity exactly.
//! - `Cayley`: the first-order Padé approximant of the geodesic's structured
//!   exponential, computed by one linear solve against a shifted identity.
//!
//! Every transport moves a tangent block unchanged into the retracted
//! point's rotated eigenbasis, which makes transports exactly linear.

use super::tangent::TangentVector;
use crate::point::{involution_from_basis, project_to_manifold, InvolutionPoint};
use crate::qr::householder_qr;
use crate::{GrassmannError, Result, TOL_ORTH};
use nalgebra::DMatrix;

/// Which retraction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetractionKind {
    /// Projection onto the manifold via eigendecomposition of Q + X.
    Eigen,
    /// Block QR orthonormalization of the moved subspace.
    Qr,
    /// Cayley transform, the first-order Padé approximant of the
    /// exponential.
    Cayley,
}

/// Moves from the base point of `x` along `x`, staying on the manifold,
/// first-order tangent to the geodesic with velocity `x`.
///
/// A zero tangent returns the base point unchanged (bit for bit), for every
/// variant.
pub fn retract(x: &TangentVector, kind: RetractionKind) -> Result<InvolutionPoint> {
    let base = x.base();
    if x.is_zero() {
        return Ok(base.clone());
    }
    match kind {
        RetractionKind::Eigen => {
            let moved = base.q() + x.ambient();
            project_to_manifold(base.dims(), &moved)
        }
        RetractionKind::Qr => {
            let factor = qr_factor(x);
            Ok(rotate_basis(base, &factor))
        }
        RetractionKind::Cayley => {
            let factor = cayley_factor(x)?;
            Ok(rotate_basis(base, &factor))
        }
    }
}

/// Transports `y` along the retraction of `x` (both at the same base): the
/// result has the block of `y` at the point `retract(x, kind)`. Exactly
/// linear in `y`, and the identity when `x = 0`.
pub fn vector_transport(
    y: &TangentVector,
    x: &TangentVector,
    kind: RetractionKind,
) -> Result<TangentVector> {
    if y.base().dims() != x.base().dims() || (y.base().v() - x.base().v()).norm() > TOL_ORTH {
        return Err(GrassmannError::Mismatch(
            "vector transport requires both vectors at the same base point".into(),
        ));
    }
    let target = retract(x, kind)?;
    TangentVector::from_block(&target, y.block().clone())
}

/// Applies an in-frame orthogonal factor to the base eigenbasis and
/// rebuilds the point.
fn rotate_basis(base: &InvolutionPoint, factor: &DMatrix<f64>) -> InvolutionPoint {
    let dims = base.dims();
    let v_new = base.v() * factor;
    let q_new = involution_from_basis(dims, &v_new);
    InvolutionPoint::from_parts(dims, q_new, v_new)
}

/// The orthogonal factor of the block QR retraction: the first k Householder
/// steps of [[I, B/2], [Bᵀ/2, -I]]. The halved blocks make the retracted
/// curve t ↦ retract(tX) leave the base point with velocity exactly X, the
/// same first-order motion as the geodesic.
fn qr_factor(x: &TangentVector) -> DMatrix<f64> {
    let dims = x.base().dims();
    let (n, k, m) = (dims.n(), dims.k(), dims.complement());
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in k..n {
        a[(i, i)] = -1.0;
    }
    let half = x.block() * 0.5;
    a.view_mut((0, k), (k, m)).copy_from(&half);
    a.view_mut((k, 0), (m, k)).copy_from(&half.transpose());
    householder_qr(&a, k, false).q
}

/// The Cayley factor (I + Λ)(I - Λ)⁻¹ with Λ = ¼[[0, -B], [Bᵀ, 0]], the
/// first-order Padé approximant of the geodesic's basis rotation. I - Λ is
/// always invertible (Λ is skew), so the solve cannot break down.
fn cayley_factor(x: &TangentVector) -> Result<DMatrix<f64>> {
    let dims = x.base().dims();
    let (n, k, m) = (dims.n(), dims.k(), dims.complement());
    let quarter = x.block() * 0.25;
    let mut lambda = DMatrix::<f64>::zeros(n, n);
    lambda.view_mut((0, k), (k, m)).copy_from(&(-&quarter));
    lambda
        .view_mut((k, 0), (m, k))
        .copy_from(&quarter.transpose());
    let plus = DMatrix::<f64>::identity(n, n) + &lambda;
    let minus = DMatrix::<f64>::identity(n, n) - &lambda;
    minus
        .lu()
        .solve(&plus)
        .ok_or_else(|| GrassmannError::LinearSolve("Cayley factor solve failed".into()))
}
