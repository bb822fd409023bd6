//! Conversions between the involution model and other common coordinates
//! for Grassmannian points.
//!
//! Four coordinate systems are supported:
//!
//! - orthogonal coset: a full orthogonal matrix whose first k columns span
//!   the subspace;
//! - Stiefel coset: an n×k matrix with orthonormal columns;
//! - full-rank coset: any n×k matrix of full column rank;
//! - projection: the orthogonal projector onto the subspace.
//!
//! Conversion into the involution model validates the structural invariants
//! of the source coordinate; conversion out is exact arithmetic on the
//! cached eigenbasis.

use crate::point::{involution_from_basis, symmetrize};
use crate::qr;
use crate::{GrassmannDims, GrassmannError, InvolutionPoint, Result, RANK_TOL, TOL_ORTH};
use nalgebra::DMatrix;

/// A Grassmannian point in one of the supported non-involution coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelCoordinate {
    /// n×n orthogonal matrix; first k columns span the subspace.
    OrthogonalCoset(DMatrix<f64>),
    /// n×k matrix with orthonormal columns spanning the subspace.
    StiefelCoset(DMatrix<f64>),
    /// n×k full-column-rank matrix whose column space is the subspace.
    FullRankCoset(DMatrix<f64>),
    /// n×n orthogonal projector onto the subspace.
    Projection(DMatrix<f64>),
}

/// Selects the target coordinate of [`convert_from_involution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    OrthogonalCoset,
    StiefelCoset,
    FullRankCoset,
    Projection,
}

/// Converts a coordinate representation into an involution point.
pub fn convert_to_involution(
    dims: GrassmannDims,
    coord: &ModelCoordinate,
) -> Result<InvolutionPoint> {
    let n = dims.n();
    let k = dims.k();
    match coord {
        ModelCoordinate::OrthogonalCoset(v) => InvolutionPoint::from_eigenbasis(dims, v.clone()),
        ModelCoordinate::StiefelCoset(y) => {
            check_shape(y, n, k)?;
            let dev = (y.transpose() * y - DMatrix::<f64>::identity(k, k)).norm();
            if dev > TOL_ORTH {
                return Err(GrassmannError::NotOrthogonal { deviation: dev });
            }
            Ok(point_from_frame(dims, y))
        }
        ModelCoordinate::FullRankCoset(a) => {
            check_shape(a, n, k)?;
            if k > 0 {
                let sv = a.clone().svd(false, false).singular_values;
                let max = sv.max();
                let min = sv.min();
                if max == 0.0 || min <= RANK_TOL * max {
                    return Err(GrassmannError::RankDeficient {
                        ratio: if max == 0.0 { 0.0 } else { min / max },
                    });
                }
            }
            let y = qr::householder_qr(a, k, false).q.columns(0, k).into_owned();
            Ok(point_from_frame(dims, &y))
        }
        ModelCoordinate::Projection(p) => {
            check_shape(p, n, n)?;
            let sym = (p - p.transpose()).norm();
            if sym > TOL_ORTH {
                return Err(GrassmannError::NotInvolution {
                    what: "projector symmetry",
                    deviation: sym,
                });
            }
            let idem = (p * p - p).norm();
            if idem > TOL_ORTH {
                return Err(GrassmannError::NotInvolution {
                    what: "projector idempotency",
                    deviation: idem,
                });
            }
            let tr = (p.trace() - k as f64).abs();
            if tr > TOL_ORTH {
                return Err(GrassmannError::NotInvolution {
                    what: "projector trace",
                    deviation: tr,
                });
            }
            // Q = 2P - I; the eigenbasis comes from the pivoted QR of
            // (I + Q)/2 = P itself.
            let mut q = symmetrize(&(p * 2.0));
            for i in 0..n {
                q[(i, i)] -= 1.0;
            }
            InvolutionPoint::from_matrix(dims, q)
        }
    }
}

/// Converts an involution point into the requested coordinate.
pub fn convert_from_involution(point: &InvolutionPoint, kind: ModelKind) -> ModelCoordinate {
    match kind {
        ModelKind::OrthogonalCoset => ModelCoordinate::OrthogonalCoset(point.v().clone()),
        ModelKind::StiefelCoset => ModelCoordinate::StiefelCoset(point.subspace_basis()),
        ModelKind::FullRankCoset => ModelCoordinate::FullRankCoset(point.subspace_basis()),
        ModelKind::Projection => {
            let n = point.dims().n();
            let mut p = point.q().clone();
            for i in 0..n {
                p[(i, i)] += 1.0;
            }
            p.scale_mut(0.5);
            ModelCoordinate::Projection(p)
        }
    }
}

/// Builds the point with subspace frame `y`, completing the eigenbasis by
/// Householder reflections so that its first k columns match `y` to
/// rounding.
fn point_from_frame(dims: GrassmannDims, y: &DMatrix<f64>) -> InvolutionPoint {
    let v = qr::complete_basis(y);
    let q = involution_from_basis(dims, &v);
    InvolutionPoint::from_parts(dims, q, v)
}

fn check_shape(m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(GrassmannError::InvalidDimensions(format!(
            "matrix is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}
