//! Geodesics, the exponential and logarithm maps, distance, and parallel
//! transport.
//!
//! A geodesic through `Q = V·I_{k,n-k}·Vᵀ` with velocity block `B` keeps the
//! block fixed and rotates the eigenbasis:
//!
//! ```text
//! V(t) = V · exp([[0, -tB/2], [tBᵀ/2, 0]]),    γ(t) = V(t)·I_{k,n-k}·V(t)ᵀ.
//! ```
//!
//! Parallel transport along the same geodesic is equally simple: a tangent
//! block is carried unchanged to the rotated basis. The logarithm inverts
//! the exponential through a CS decomposition of V₀ᵀV₁, reading the
//! principal angles and the rotation planes off its factors.

use super::csd::{csd_2block, principal_angles};
use super::tangent::TangentVector;
use crate::expm::exp_structured_auto;
use crate::point::{involution_from_basis, InvolutionPoint};
use crate::{GrassmannError, Result};
#[cfg(test)]
use nalgebra::DMatrix;

/// Margin below π/2 at which the largest principal angle is treated as a
/// cut-locus hit: the logarithm is no longer unique (or numerically stable)
/// there.
const ANGLE_GUARD: f64 = 1e-6;

/// Evaluates the geodesic with initial point `dir.base()` and initial
/// velocity `dir` at time `t`.
pub fn geodesic(dir: &TangentVector, t: f64) -> InvolutionPoint {
    let base = dir.base();
    if t == 0.0 || dir.is_zero() {
        return base.clone();
    }
    let rotation = exp_structured_auto(&(dir.block() * (-0.5 * t)));
    let v_new = base.v() * rotation;
    let dims = base.dims();
    let q_new = involution_from_basis(dims, &v_new);
    InvolutionPoint::from_parts(dims, q_new, v_new)
}

/// The Riemannian exponential: the geodesic with velocity `dir` at time 1.
pub fn exp_map(dir: &TangentVector) -> InvolutionPoint {
    geodesic(dir, 1.0)
}

/// The tangent vector at `from` whose exponential is `to`; the inverse of
/// [`exp_map`] away from the cut locus.
///
/// Fails with [`GrassmannError::CutLocus`] when the largest principal angle
/// reaches π/2, where the minimizing geodesic stops being unique.
pub fn connecting_tangent(from: &InvolutionPoint, to: &InvolutionPoint) -> Result<TangentVector> {
    if from.dims() != to.dims() {
        return Err(GrassmannError::Mismatch(format!(
            "points live on different manifolds: {:?} vs {:?}",
            from.dims(),
            to.dims()
        )));
    }
    let dims = from.dims();
    let (n, k) = (dims.n(), dims.k());
    if k == 0 || k == n {
        // A single-point manifold; the only tangent vector is zero.
        return Ok(TangentVector::zero(from));
    }
    if 2 * k > n {
        // Work on the complementary Grassmannian, an isometry, where the
        // leading block is the smaller one; blocks map as B = -B'ᵀ.
        let flipped = connecting_tangent(&from.negated(), &to.negated())?;
        return TangentVector::from_block(from, -flipped.block().transpose());
    }

    let m = from.v().transpose() * to.v();
    let factors = csd_2block(&m, k)?;
    if let Some(&theta_max) = factors.theta.first() {
        if theta_max >= std::f64::consts::FRAC_PI_2 - ANGLE_GUARD {
            return Err(GrassmannError::CutLocus { theta_max });
        }
    }
    // B = -2·U·diag(Θ)·V1ᵀ: exponentiating -B/2 = U·Θ·V1ᵀ rotates the basis
    // through exactly the principal angles onto the target subspace.
    let mm = dims.complement();
    let v1 = factors.v.columns(0, k);
    let mut scaled_u = factors.u.clone();
    for (i, &t) in factors.theta.iter().enumerate() {
        scaled_u.column_mut(i).scale_mut(-2.0 * t);
    }
    let block = scaled_u * v1.transpose();
    debug_assert_eq!(block.shape(), (k, mm));
    TangentVector::from_block(from, block)
}

/// Alias for [`connecting_tangent`], under the name usual for the inverse
/// exponential.
pub fn log_map(from: &InvolutionPoint, to: &InvolutionPoint) -> Result<TangentVector> {
    connecting_tangent(from, to)
}

/// Geodesic distance: 2√2·‖Θ‖₂ over the principal angles Θ between the two
/// subspaces. Defined for every pair of points, cut locus included.
pub fn distance(a: &InvolutionPoint, b: &InvolutionPoint) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(GrassmannError::Mismatch(format!(
            "points live on different manifolds: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let dims = a.dims();
    let (n, k) = (dims.n(), dims.k());
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let angles = if 2 * k > n {
        principal_angles(&a.negated().subspace_basis(), &b.negated().subspace_basis())
    } else {
        principal_angles(&a.subspace_basis(), &b.subspace_basis())
    };
    let sum_sq: f64 = angles.iter().map(|t| t * t).sum();
    Ok(2.0 * std::f64::consts::SQRT_2 * sum_sq.sqrt())
}

/// Parallel transport of `x` along the geodesic with initial velocity
/// `along` (sharing its base point) to time 1: the block is carried
/// unchanged into the endpoint's rotated eigenbasis.
///
/// The returned vector's [`TangentVector::base`] is the geodesic endpoint,
/// bit-identical to `exp_map(along)`.
pub fn parallel_transport(x: &TangentVector, along: &TangentVector) -> Result<TangentVector> {
    if x.base().dims() != along.base().dims()
        || (x.base().v() - along.base().v()).norm() > crate::TOL_ORTH
    {
        return Err(GrassmannError::Mismatch(
            "transport requires both vectors at the same base point".into(),
        ));
    }
    let end = exp_map(along);
    TangentVector::from_block(&end, x.block().clone())
}

/// Finite-difference velocity of a curve of involution points, used by
/// tests; central difference in the ambient space.
#[cfg(test)]
pub(crate) fn numeric_velocity<F>(curve: F, t: f64, h: f64) -> DMatrix<f64>
where
    F: Fn(f64) -> InvolutionPoint,
{
    let plus = curve(t + h);
    let minus = curve(t - h);
    (plus.q() - minus.q()) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{random_gaussian_matrix, random_point};
    use crate::GrassmannDims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, k: usize, seed: u64) -> (InvolutionPoint, TangentVector) {
        let dims = GrassmannDims::new(n, k).unwrap();
        let p = random_point(dims, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31) ^ 0xabcd);
        let b = random_gaussian_matrix(k, n - k, &mut rng);
        let x = TangentVector::from_block(&p, b).unwrap();
        (p, x)
    }

    #[test]
    fn two_by_two_geodesic_is_a_rotation() {
        // Base span{e1} with unit block: γ(t) = [[cos t, sin t], [sin t, -cos t]].
        let dims = GrassmannDims::new(2, 1).unwrap();
        let base = InvolutionPoint::from_eigenbasis(dims, DMatrix::identity(2, 2)).unwrap();
        let x = TangentVector::from_block(&base, DMatrix::from_element(1, 1, 1.0)).unwrap();
        for &t in &[0.3, 1.0, 2.5] {
            let got = geodesic(&x, t);
            let want =
                DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), t.sin(), -t.cos()]);
            assert!((got.q() - &want).norm() <= 1e-14, "t = {t}");
        }
    }

    #[test]
    fn geodesic_at_zero_is_the_base_point() {
        let (p, x) = setup(9, 4, 1);
        let at_zero = geodesic(&x, 0.0);
        assert_eq!(at_zero.q(), p.q());
        assert_eq!(at_zero.v(), p.v());
        let still = geodesic(&TangentVector::zero(&p), 3.7);
        assert_eq!(still.q(), p.q());
    }

    #[test]
    fn geodesic_points_stay_on_the_manifold() {
        let (_, x) = setup(11, 4, 2);
        for &t in &[1e-6, 0.01, 0.3, 1.0, 4.0] {
            let p = geodesic(&x, t);
            assert!(
                p.invariant_deviation() <= 1e-12,
                "deviation {} at t = {t}",
                p.invariant_deviation()
            );
        }
    }

    #[test]
    fn geodesic_speed_matches_the_metric() {
        let (p, x) = setup(8, 3, 3);
        // Unit-speed check: d(γ(0), γ(t)) = t·‖X‖ while angles stay short.
        let t = 0.1 / x.norm();
        let d = distance(&p, &geodesic(&x, t)).unwrap();
        assert!((d - t * x.norm()).abs() <= 1e-10);
    }

    #[test]
    fn geodesic_velocity_matches_ambient_derivative() {
        let (_, x) = setup(7, 3, 4);
        let v0 = numeric_velocity(|t| geodesic(&x, t), 0.0, 1e-5);
        assert!((v0 - x.ambient()).norm() <= 1e-8);
    }

    #[test]
    fn log_inverts_exp() {
        for (n, k, seed) in [(10usize, 3usize, 5u64), (9, 4, 6), (12, 6, 7)] {
            let (p, x) = setup(n, k, seed);
            // Scale so the largest principal angle stays clearly inside the
            // injectivity radius.
            let scale = 1.2 / x.block().norm();
            let x = x.scaled(scale);
            let q = exp_map(&x);
            let back = log_map(&p, &q).unwrap();
            let err = (back.block() - x.block()).norm();
            assert!(err <= 1e-8, "roundtrip error {err} at n={n} k={k}");
        }
    }

    #[test]
    fn exp_inverts_log() {
        for (n, k, seed) in [(9usize, 3usize, 8u64), (8, 4, 9), (10, 7, 10)] {
            let dims = GrassmannDims::new(n, k).unwrap();
            let a = random_point(dims, seed);
            let b = random_point(dims, seed ^ 0xffff);
            let x = log_map(&a, &b).unwrap();
            let reached = exp_map(&x);
            assert!(
                (reached.q() - b.q()).norm() <= 1e-9,
                "missed target by {}",
                (reached.q() - b.q()).norm()
            );
            // The connecting vector's length is the distance.
            assert!((x.norm() - distance(&a, &b).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn oversized_subspaces_route_through_the_complement() {
        let dims = GrassmannDims::new(10, 7).unwrap();
        let a = random_point(dims, 11);
        let b = random_point(dims, 12);
        let x = log_map(&a, &b).unwrap();
        assert_eq!(x.block().shape(), (7, 3));
        assert!((exp_map(&x).q() - b.q()).norm() <= 1e-9);
        assert!((x.norm() - distance(&a, &b).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn cut_locus_is_reported() {
        // span{e1} and span{e2} in the plane meet at angle π/2.
        let dims = GrassmannDims::new(2, 1).unwrap();
        let a = InvolutionPoint::from_eigenbasis(dims, DMatrix::identity(2, 2)).unwrap();
        let swapped = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let b = InvolutionPoint::from_eigenbasis(dims, swapped).unwrap();
        assert!(matches!(
            log_map(&a, &b),
            Err(GrassmannError::CutLocus { .. })
        ));
        // Distance is still defined there: 2√2·(π/2).
        let d = distance(&a, &b).unwrap();
        assert!((d - std::f64::consts::SQRT_2 * std::f64::consts::PI).abs() <= 1e-12);
    }

    #[test]
    fn distance_oracle_on_a_known_pair() {
        // span{e1} versus span{(e1+e2)/√2}: one principal angle of π/4, so
        // the distance is 2√2·π/4 = π/√2.
        let dims = GrassmannDims::new(2, 1).unwrap();
        let a = InvolutionPoint::from_eigenbasis(dims, DMatrix::identity(2, 2)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let vb = DMatrix::from_row_slice(2, 2, &[s, -s, s, s]);
        let b = InvolutionPoint::from_eigenbasis(dims, vb).unwrap();
        let want = std::f64::consts::PI / std::f64::consts::SQRT_2;
        assert!((distance(&a, &b).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn distance_is_a_metric_on_samples() {
        let dims = GrassmannDims::new(7, 3).unwrap();
        let pts: Vec<_> = (0..4)
            .map(|s| random_point(dims, 100 + s))
            .collect();
        for p in &pts {
            assert!(distance(p, p).unwrap() <= 1e-8);
        }
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let dij = distance(&pts[i], &pts[j]).unwrap();
                let dji = distance(&pts[j], &pts[i]).unwrap();
                assert!((dij - dji).abs() <= 1e-10);
                for l in 0..pts.len() {
                    let dil = distance(&pts[i], &pts[l]).unwrap();
                    let dlj = distance(&pts[l], &pts[j]).unwrap();
                    assert!(dij <= dil + dlj + 1e-9);
                }
            }
        }
    }

    #[test]
    fn transport_is_an_isometry() {
        let (p, along) = setup(9, 4, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = TangentVector::from_block(&p, random_gaussian_matrix(4, 5, &mut rng)).unwrap();
        let y = TangentVector::from_block(&p, random_gaussian_matrix(4, 5, &mut rng)).unwrap();
        let tx = parallel_transport(&x, &along).unwrap();
        let ty = parallel_transport(&y, &along).unwrap();
        assert!((tx.norm() - x.norm()).abs() <= 1e-13);
        let before = x.inner(&y).unwrap();
        let after = tx.inner(&ty).unwrap();
        assert!((before - after).abs() <= 1e-12);
    }

    #[test]
    fn transported_velocity_is_the_geodesic_velocity() {
        let (_, along) = setup(8, 3, 15);
        let along = along.scaled(0.4 / along.norm());
        let moved = parallel_transport(&along, &along).unwrap();
        // Compare against the ambient derivative of the geodesic at t = 1.
        let v1 = numeric_velocity(|t| geodesic(&along, t), 1.0, 1e-5);
        assert!((moved.ambient() - v1).norm() <= 1e-8);
        // And the transported base is exactly the exponential's endpoint.
        let end = exp_map(&along);
        assert_eq!(moved.base().v(), end.v());
    }

    #[test]
    fn transport_requires_a_common_base() {
        let (_, x) = setup(6, 2, 16);
        let (_, along) = setup(6, 2, 17);
        assert!(parallel_transport(&x, &along).is_err());
    }
}
