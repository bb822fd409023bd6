//! Householder QR with an explicit sign convention.
//!
//! Every QR factorization in this crate goes through this module rather than
//! a library routine because the surrounding geometry depends on the sign
//! convention: each reflector maps its pivot column to `+‖x‖·e_j`, so `R` has
//! a nonnegative diagonal and a matrix whose leading k×k block is already
//! diagonal with positive entries factors with `Q = I` exactly. The QR-based
//! retraction and the eigenbasis extraction both rely on that fixed point.

use nalgebra::{DMatrix, DVector};

pub(crate) struct QrFactors {
    /// Accumulated orthogonal factor, m×m.
    pub q: DMatrix<f64>,
    /// Partially triangularized matrix after `steps` reflections, m×n.
    #[allow(dead_code)]
    pub r: DMatrix<f64>,
    /// Column permutation applied to the input (identity without pivoting).
    #[allow(dead_code)]
    pub perm: Vec<usize>,
}

/// Runs `steps` Householder reflections on `a`, optionally with column
/// pivoting (largest remaining column norm wins; the earliest column wins
/// ties, so diagonal inputs are left in place).
pub(crate) fn householder_qr(a: &DMatrix<f64>, steps: usize, pivot: bool) -> QrFactors {
    let m = a.nrows();
    let n = a.ncols();
    let s = steps.min(m).min(n);
    let mut r = a.clone();
    let mut q = DMatrix::<f64>::identity(m, m);
    let mut perm: Vec<usize> = (0..n).collect();

    for j in 0..s {
        if pivot {
            let mut best = j;
            let mut best_norm = trailing_norm_sq(&r, j, j);
            for c in (j + 1)..n {
                let nc = trailing_norm_sq(&r, j, c);
                if nc > best_norm {
                    best = c;
                    best_norm = nc;
                }
            }
            if best != j {
                r.swap_columns(j, best);
                perm.swap(j, best);
            }
        }

        let len = m - j;
        let mut v = DVector::<f64>::zeros(len);
        for i in 0..len {
            v[i] = r[(j + i, j)];
        }
        let x0 = v[0];
        let tail_sq = if len > 1 {
            v.rows(1, len - 1).norm_squared()
        } else {
            0.0
        };
        let sigma = (x0 * x0 + tail_sq).sqrt();
        if sigma == 0.0 {
            continue; // zero column: reflector is the identity
        }
        // Reflector sends the column to +sigma·e₁. When x0 ≥ 0 the naive
        // x0 - sigma cancels, so use tail_sq / (x0 + sigma) instead.
        if x0 >= 0.0 {
            v[0] = -tail_sq / (x0 + sigma);
        } else {
            v[0] = x0 - sigma;
        }
        let vtv = v.norm_squared();
        if vtv == 0.0 {
            continue; // column is already +sigma·e₁
        }
        let beta = 2.0 / vtv;

        // r[j.., j..] ← H · r[j.., j..]
        for c in j..n {
            let mut dot = 0.0;
            for i in 0..len {
                dot += v[i] * r[(j + i, c)];
            }
            let w = beta * dot;
            for i in 0..len {
                r[(j + i, c)] -= w * v[i];
            }
        }
        r[(j, j)] = sigma;
        for i in 1..len {
            r[(j + i, j)] = 0.0;
        }

        // q ← q · H (H symmetric), touching columns j.. only
        for row in 0..m {
            let mut dot = 0.0;
            for i in 0..len {
                dot += q[(row, j + i)] * v[i];
            }
            let w = beta * dot;
            for i in 0..len {
                q[(row, j + i)] -= w * v[i];
            }
        }
    }

    QrFactors { q, r, perm }
}

fn trailing_norm_sq(r: &DMatrix<f64>, from_row: usize, col: usize) -> f64 {
    let mut s = 0.0;
    for i in from_row..r.nrows() {
        s += r[(i, col)] * r[(i, col)];
    }
    s
}

/// Extends a matrix with orthonormal-ish columns to a full orthogonal basis:
/// the returned m×m orthogonal matrix has first `y.ncols()` columns spanning
/// (and, for orthonormal input, matching to rounding) the columns of `y`.
pub(crate) fn complete_basis(y: &DMatrix<f64>) -> DMatrix<f64> {
    householder_qr(y, y.ncols(), false).q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    #[test]
    fn positive_diagonal_input_factors_to_identity() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5, 0.0, 0.0]));
        let f = householder_qr(&a, 2, true);
        assert_abs_diff_eq!(f.q, DMatrix::identity(4, 4), epsilon = 0.0);
        assert_eq!(f.perm, vec![0, 1, 2, 3]);
    }

    #[test]
    fn reconstructs_input_with_pivoting() {
        let a = random_matrix(7, 5, 1);
        let f = householder_qr(&a, 5, true);
        let mut permuted = DMatrix::zeros(7, 5);
        for (dst, &src) in f.perm.iter().enumerate() {
            permuted.set_column(dst, &a.column(src));
        }
        let residual = (&f.q * &f.r - permuted).norm();
        assert!(residual < 1e-13, "residual {residual}");
        let orth = (f.q.transpose() * &f.q - DMatrix::identity(7, 7)).norm();
        assert!(orth < 1e-13, "orthogonality {orth}");
    }

    #[test]
    fn r_diagonal_is_nonnegative() {
        let a = random_matrix(6, 6, 2);
        let f = householder_qr(&a, 6, false);
        for j in 0..6 {
            assert!(f.r[(j, j)] >= 0.0, "negative diagonal at {j}");
        }
    }

    #[test]
    fn completion_preserves_orthonormal_prefix() {
        let g = random_matrix(8, 3, 3);
        let y = householder_qr(&g, 3, false).q.columns(0, 3).into_owned();
        let full = complete_basis(&y);
        let prefix = full.columns(0, 3).into_owned();
        assert_abs_diff_eq!(prefix, y, epsilon = 1e-13);
        let orth = (full.transpose() * &full - DMatrix::identity(8, 8)).norm();
        assert!(orth < 1e-13, "orthogonality {orth}");
    }

    #[test]
    fn pivoting_handles_rank_deficiency() {
        // Rank-2 matrix whose leading column is zero: pivoting must still
        // produce an orthogonal factor.
        let mut a = DMatrix::<f64>::zeros(5, 5);
        a[(0, 2)] = 2.0;
        a[(1, 2)] = 1.0;
        a[(3, 4)] = -3.0;
        let f = householder_qr(&a, 2, true);
        let orth = (f.q.transpose() * &f.q - DMatrix::identity(5, 5)).norm();
        assert!(orth < 1e-14);
        assert_eq!(f.perm[0], 4); // largest column first
    }
}
