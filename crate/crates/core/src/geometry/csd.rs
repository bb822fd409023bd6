//! A two-block CS decomposition for orthogonal matrices.
//!
//! An orthogonal n×n matrix M partitioned with k ≤ n-k leading rows and
//! columns factors as
//!
//! ```text
//! [M11 M12]   [U  0]   [cos Θ   sin Θ  0]   [W  0]ᵀ
//! [M21 M22] = [0  V] · [-sin Θ  cos Θ  0] · [0  Z]
//!                      [0       0      I]
//! ```
//!
//! with U, W orthogonal k×k, V = [V1 V2] and Z = [Z1 Z2] orthogonal
//! (n-k)×(n-k), and Θ the principal angles in [0, π/2]. The logarithm and
//! the distance read the angles and the factors U, V1 off this form.
//!
//! The construction runs two one-sided SVDs and takes each angle's factors
//! from the better-conditioned side. M11 = U·cosΘ·Wᵀ resolves columns
//! sharply where the cosines are well separated, which is the large-angle
//! end; M21 = -V1·sinΘ·Wᵀ does the same for the sines at the small-angle
//! end. A single cosine-side SVD looks attractive but loses six digits in
//! the factors when several angles are small: the cosines then cluster near
//! one and the singular vectors of M11 smear across the cluster, even
//! though the angles themselves stay accurate. The two sides meet at π/4,
//! where both extractions are equally well conditioned. The leftover factor
//! of each column comes from an exact algebraic relation that divides by
//! whichever of cos/sin is at least 1/√2 there.

use crate::qr::complete_basis;
use crate::{GrassmannError, Result};
use nalgebra::DMatrix;

/// Orthogonality tolerance for the input matrix.
const INPUT_ORTH_TOL: f64 = 1e-8;

/// The factors of a two-block CS decomposition. `v` and `z` are the full
/// (n-k)×(n-k) right-block factors; their leading k columns are the V1, Z1
/// parts paired with the angles.
#[derive(Debug, Clone)]
pub struct CsFactors {
    pub u: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub z: DMatrix<f64>,
    /// Principal angles in descending order, in [0, π/2].
    pub theta: Vec<f64>,
}

impl CsFactors {
    /// Rebuilds the orthogonal matrix from the factors.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let k = self.u.nrows();
        let m = self.v.nrows();
        let n = k + m;
        let v1 = self.v.columns(0, k);
        let z1 = self.z.columns(0, k);
        let v2 = self.v.columns(k, m - k);
        let z2 = self.z.columns(k, m - k);
        let cos = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            k,
            self.theta.iter().map(|t| t.cos()),
        ));
        let sin = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            k,
            self.theta.iter().map(|t| t.sin()),
        ));
        let mut out = DMatrix::zeros(n, n);
        out.view_mut((0, 0), (k, k))
            .copy_from(&(&self.u * &cos * self.w.transpose()));
        out.view_mut((0, k), (k, m))
            .copy_from(&(&self.u * &sin * z1.transpose()));
        out.view_mut((k, 0), (m, k))
            .copy_from(&(-(v1 * &sin) * self.w.transpose()));
        out.view_mut((k, k), (m, m))
            .copy_from(&(v1 * cos * z1.transpose() + v2 * z2.transpose()));
        out
    }
}

/// Computes the two-block CS decomposition of an orthogonal matrix with
/// leading block size k ≤ n-k.
pub fn csd_2block(m_full: &DMatrix<f64>, k: usize) -> Result<CsFactors> {
    let n = m_full.nrows();
    if m_full.ncols() != n {
        return Err(GrassmannError::Mismatch(format!(
            "CS decomposition needs a square matrix, got {}x{}",
            n,
            m_full.ncols()
        )));
    }
    let m = n
        .checked_sub(k)
        .filter(|&m| k <= m)
        .ok_or_else(|| {
            GrassmannError::InvalidDimensions(format!(
                "leading block size {k} exceeds half of n = {n}"
            ))
        })?;
    let orth_dev = (m_full.transpose() * m_full - DMatrix::<f64>::identity(n, n)).norm();
    if orth_dev > INPUT_ORTH_TOL {
        return Err(GrassmannError::NotOrthogonal {
            deviation: orth_dev,
        });
    }

    if k == 0 {
        // No angles; the decomposition degenerates to M itself on the right.
        return Ok(CsFactors {
            u: DMatrix::zeros(0, 0),
            w: DMatrix::zeros(0, 0),
            v: DMatrix::identity(m, m),
            z: m_full.transpose().clone_owned(),
            theta: Vec::new(),
        });
    }

    let m11 = m_full.view((0, 0), (k, k)).clone_owned();
    let m12 = m_full.view((0, k), (k, m)).clone_owned();
    let m21 = m_full.view((k, 0), (m, k)).clone_owned();
    let m22 = m_full.view((k, k), (m, m)).clone_owned();

    let (u_cos, w_cos, cosines) = ordered_svd(&m11);
    let (p_sin, q_sin, sines) = ordered_svd(&m21);

    // Split the spectrum at π/4; the count comes from one list so the two
    // groups always partition the k columns even if an angle sits on the
    // boundary. Columns are assembled directly in descending-angle order:
    // the cosine-side SVD lists angles ascending, the sine side descending.
    let large = sines
        .iter()
        .filter(|&&s| s >= std::f64::consts::FRAC_1_SQRT_2)
        .count();

    let mut u = DMatrix::zeros(k, k);
    let mut w = DMatrix::zeros(k, k);
    let mut v = DMatrix::zeros(m, m);
    let mut theta = vec![0.0f64; k];
    for j in 0..k {
        if j < large {
            // Large angle: cosine-side factors; the V1 column comes from
            // M21·w = -sin θ·v, dividing by sin θ ≥ 1/√2.
            let src = k - 1 - j;
            theta[j] = cosines[src].clamp(0.0, 1.0).acos();
            let t = -(&m21 * w_cos.column(src));
            let t_norm = t.norm();
            u.set_column(j, &u_cos.column(src));
            w.set_column(j, &w_cos.column(src));
            v.set_column(j, &(t / t_norm));
        } else {
            // Small angle: sine-side factors; the U column comes from
            // M11·w = cos θ·u, dividing by cos θ ≥ 1/√2. A zero sine still
            // yields a valid orthonormal V1 column from the SVD, so exact
            // zeros need no special casing.
            theta[j] = sines[j].min(1.0).asin();
            let ucol = &m11 * q_sin.column(j);
            let ucol_norm = ucol.norm();
            u.set_column(j, &(&ucol / ucol_norm));
            w.set_column(j, &q_sin.column(j));
            v.set_column(j, &(-p_sin.column(j)));
        }
    }

    // Complete the assembled V1 columns to a full basis; only the
    // completion part is kept, V1 itself stays as extracted.
    let full = complete_basis(&v.columns(0, k).clone_owned());
    v.view_mut((0, k), (m, m - k))
        .copy_from(&full.columns(k, m - k));

    // Right factor: Z1 from whichever relation divides by the larger of
    // cos θ and sin θ, Z2 exactly.
    let mut z = DMatrix::zeros(m, m);
    for i in 0..k {
        let col = if theta[i] < std::f64::consts::FRAC_PI_4 {
            m22.transpose() * v.column(i) / theta[i].cos()
        } else {
            m12.transpose() * u.column(i) / theta[i].sin()
        };
        z.set_column(i, &col);
    }
    z.view_mut((0, k), (m, m - k))
        .copy_from(&(m22.transpose() * v.columns(k, m - k)));

    // Present the angles in descending order.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| theta[b].partial_cmp(&theta[a]).expect("finite angles"));
    let permute = |mat: &DMatrix<f64>, cols: &[usize]| -> DMatrix<f64> {
        let mut out = mat.clone();
        for (dst, &src) in cols.iter().enumerate() {
            out.set_column(dst, &mat.column(src));
        }
        out
    };
    let u = permute(&u, &order);
    let w = permute(&w, &order);
    let mut order_right: Vec<usize> = order.clone();
    order_right.extend(k..m);
    let v = permute(&v, &order_right);
    let z = permute(&z, &order_right);
    let theta: Vec<f64> = order.iter().map(|&i| theta[i]).collect();

    Ok(CsFactors { u, w, v, z, theta })
}

/// Thin SVD `a = U·diag(σ)·Vᵀ` with the singular values in descending order
/// and the factor columns permuted to match.
fn ordered_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let r = a.nrows().min(a.ncols());
    if r == 0 {
        return (
            DMatrix::zeros(a.nrows(), 0),
            DMatrix::zeros(a.ncols(), 0),
            Vec::new(),
        );
    }
    let svd = a.clone().svd(true, true);
    let u_raw = svd.u.expect("requested U");
    let vt_raw = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .expect("finite singular values")
    });
    let mut u = DMatrix::zeros(a.nrows(), r);
    let mut v = DMatrix::zeros(a.ncols(), r);
    let mut vals = Vec::with_capacity(r);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &vt_raw.row(src).transpose());
        vals.push(svd.singular_values[src]);
    }
    (u, v, vals)
}

/// Principal angles between the column spans of two n×k orthonormal frames,
/// in descending order. Uses the same guarded two-branch extraction as the
/// CS decomposition: small angles from the sine, large ones from the cosine.
pub(crate) fn principal_angles(ya: &DMatrix<f64>, yb: &DMatrix<f64>) -> Vec<f64> {
    let k = ya.ncols();
    if k == 0 {
        return Vec::new();
    }
    let overlap = ya.transpose() * yb;
    let (_, w, cosines) = ordered_svd(&overlap);
    // Sines from the projection residual (I - Ya·Yaᵀ)·Yb·W, whose columns
    // have norm sin θᵢ.
    let ybw = yb * &w;
    let resid = &ybw - ya * (ya.transpose() * &ybw);
    let mut theta: Vec<f64> = (0..k)
        .map(|i| {
            let c = cosines[i].clamp(0.0, 1.0);
            let s = resid.column(i).norm().min(1.0);
            if c >= std::f64::consts::FRAC_1_SQRT_2 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect();
    theta.sort_by(|a, b| b.partial_cmp(a).expect("finite angles"));
    theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expm::exp_structured_exact;
    use crate::point::random_gaussian_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_gaussian_matrix(n, n, &mut rng);
        complete_basis(&a)
    }

    fn check_factors(m: &DMatrix<f64>, k: usize, tol: f64) -> CsFactors {
        let f = csd_2block(m, k).unwrap();
        let mm = m.nrows() - k;
        let eye_k = DMatrix::<f64>::identity(k, k);
        let eye_m = DMatrix::<f64>::identity(mm, mm);
        assert!((f.u.transpose() * &f.u - &eye_k).norm() <= 1e-12);
        assert!((f.w.transpose() * &f.w - &eye_k).norm() <= 1e-12);
        assert!((f.v.transpose() * &f.v - &eye_m).norm() <= 1e-12);
        assert!((f.z.transpose() * &f.z - &eye_m).norm() <= 1e-11);
        for pair in f.theta.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        for &t in &f.theta {
            assert!((-1e-15..=std::f64::consts::FRAC_PI_2 + 1e-15).contains(&t));
        }
        let err = (f.reconstruct() - m).norm();
        assert!(err <= tol, "reconstruction error {err}");
        f
    }

    #[test]
    fn identity_has_zero_angles() {
        let eye = DMatrix::<f64>::identity(7, 7);
        let f = check_factors(&eye, 3, 1e-12);
        assert!(f.theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn random_orthogonal_inputs_reconstruct() {
        for (n, k, seed) in [(8usize, 3usize, 1u64), (9, 4, 2), (10, 5, 3), (6, 1, 4)] {
            let m = random_orthogonal(n, seed);
            check_factors(&m, k, 1e-10);
        }
    }

    #[test]
    fn equal_split_leaves_no_second_block() {
        let m = random_orthogonal(8, 5);
        let f = check_factors(&m, 4, 1e-10);
        assert_eq!(f.v.ncols(), 4);
        assert_eq!(f.theta.len(), 4);
    }

    #[test]
    fn tiny_angles_are_resolved_from_the_sine_side() {
        // Build M = exp([[0, C], [-Cᵀ, 0]]) with an angle spectrum reaching
        // down to rounding level.
        let k = 3;
        let mm = 5;
        let mut c = DMatrix::<f64>::zeros(k, mm);
        c[(0, 0)] = 1e-13;
        c[(1, 1)] = 1e-7;
        c[(2, 2)] = 0.9;
        let m = exp_structured_exact(&c).into_matrix();
        let f = check_factors(&m, k, 1e-10);
        assert!((f.theta[0] - 0.9).abs() <= 1e-10);
        assert!((f.theta[1] - 1e-7).abs() <= 1e-12);
        assert!(f.theta[2] <= 1e-11);
    }

    #[test]
    fn clustered_small_angles_keep_factor_accuracy() {
        // All cosines within 1e-3 of one. A cosine-side extraction loses
        // six digits in the factors here (the angles stay accurate, the
        // singular vectors of M11 smear across the cluster); the sine side
        // keeps the reconstruction at rounding level.
        let spectrum = [0.019, 0.0086, 0.0032, 0.0022];
        let mut c = DMatrix::<f64>::zeros(4, 4);
        for (i, &t) in spectrum.iter().enumerate() {
            c[(i, i)] = t;
        }
        let m = exp_structured_exact(&c).into_matrix();
        let f = check_factors(&m, 4, 1e-13);
        for (got, want) in f.theta.iter().zip(spectrum.iter()) {
            assert!((got - want).abs() <= 1e-13);
        }
    }

    #[test]
    fn near_right_angles_use_the_cosine_branch() {
        let k = 2;
        let mut c = DMatrix::<f64>::zeros(k, 4);
        c[(0, 0)] = std::f64::consts::FRAC_PI_2 - 1e-8;
        c[(1, 1)] = std::f64::consts::FRAC_PI_2 - 0.3;
        let m = exp_structured_exact(&c).into_matrix();
        let f = check_factors(&m, k, 1e-10);
        assert!((f.theta[0] - c[(0, 0)]).abs() <= 1e-8);
        assert!((f.theta[1] - c[(1, 1)]).abs() <= 1e-10);
    }

    #[test]
    fn angles_match_generator_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut c = random_gaussian_matrix(3, 6, &mut rng);
        c.scale_mut(0.4 / c.norm());
        let m = exp_structured_exact(&c).into_matrix();
        let f = check_factors(&m, 3, 1e-10);
        let mut sv: Vec<f64> = c.clone().svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in f.theta.iter().zip(sv.iter()) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn oversized_leading_block_is_rejected() {
        let m = random_orthogonal(7, 9);
        assert!(matches!(
            csd_2block(&m, 4),
            Err(GrassmannError::InvalidDimensions(_))
        ));
    }

    #[test]
    fn non_orthogonal_input_is_rejected() {
        let m = DMatrix::<f64>::from_element(6, 6, 0.5);
        assert!(matches!(
            csd_2block(&m, 2),
            Err(GrassmannError::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn zero_block_size_degenerates() {
        let m = random_orthogonal(5, 10);
        let f = check_factors(&m, 0, 1e-12);
        assert!(f.theta.is_empty());
    }

    #[test]
    fn principal_angle_helper_agrees_with_csd() {
        let m = random_orthogonal(9, 11);
        let k = 4;
        let f = csd_2block(&m, k).unwrap();
        // Frames: the identity's first k columns against M's first k columns.
        let ya = DMatrix::<f64>::identity(9, 9).columns(0, k).clone_owned();
        let yb = m.columns(0, k).clone_owned();
        let angles = principal_angles(&ya, &yb);
        for (a, b) in angles.iter().zip(f.theta.iter()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }
}
