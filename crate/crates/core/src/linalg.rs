//! Small dense linear-algebra helpers shared by the numerical modules.

use nalgebra::{ComplexField, DMatrix, DVector, Dyn, SVD};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `[Re(m) Im(m)]`, stacked horizontally.
pub fn split_re_im(m: &CMatrix) -> RMatrix {
    let (rows, cols) = m.shape();
    RMatrix::from_fn(rows, 2 * cols, |r, c| if c < cols { m[(r, c)].re } else { m[(r, c - cols)].im })
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Frobenius norm of `m - m^T`.
pub fn asymmetry<T>(m: &DMatrix<T>) -> f64
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    (m - m.transpose()).norm()
}

/// Relative reconstruction error above which a factorization is rejected.
const SVD_RECON_TOL: f64 = 1e-12;

fn svd_error<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, svd: &SVD<T, Dyn, Dyn>) -> f64 {
    let (Some(u), Some(v_t)) = (&svd.u, &svd.v_t) else {
        return f64::INFINITY;
    };
    let mut us = u.clone();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        us.column_mut(k).scale_mut(s);
    }
    let scale = m.norm();
    let err = (us * v_t - m).norm();
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

/// Full SVD whose reconstruction is checked. The default bidiagonal
/// iteration occasionally stops on an inaccurate factorization; tighter
/// convergence and the adjoint are tried before giving up, and the most
/// accurate candidate is returned.
pub fn checked_svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> SVD<T, Dyn, Dyn> {
    let mut best = m.clone().svd(true, true);
    let mut best_err = svd_error(m, &best);
    if best_err <= SVD_RECON_TOL {
        return best;
    }
    if let Some(tight) = m.clone().try_svd(true, true, f64::EPSILON, 0) {
        let err = svd_error(m, &tight);
        if err < best_err {
            (best, best_err) = (tight, err);
        }
        if best_err <= SVD_RECON_TOL {
            return best;
        }
    }
    let adj = m.adjoint().svd(true, true);
    let flipped = SVD {
        u: adj.v_t.as_ref().map(|v| v.adjoint()),
        v_t: adj.u.as_ref().map(|u| u.adjoint()),
        singular_values: adj.singular_values,
    };
    if svd_error(m, &flipped) < best_err {
        flipped
    } else {
        best
    }
}

/// Singular values of `m`, descending.
pub fn singular_values<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = checked_svd(m).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &RMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&smax) if smax > 0.0 => sv.iter().filter(|&&s| s > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Minimum-norm least-squares solution of `a x = b`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: RVector,
    pub rank: usize,
    /// sigma_min / sigma_max over all `min(rows, cols)` singular values.
    pub conditioning: f64,
}

/// SVD-based minimum-norm solve; singular values at or below
/// `rel_tol * sigma_max` are treated as zero.
pub fn min_norm_lstsq(a: &RMatrix, b: &RVector, rel_tol: f64) -> LeastSquares {
    let cols = a.ncols();
    if a.nrows() == 0 || cols == 0 {
        return LeastSquares { x: RVector::zeros(cols), rank: 0, conditioning: 0.0 };
    }
    let svd = checked_svd(a);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let cutoff = rel_tol * smax;

    let mut x = RVector::zeros(cols);
    let mut rank = 0;
    for (k, &s) in sv.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coeff = u.column(k).dot(b) / s;
            x.axpy(coeff, &v_t.row(k).transpose(), 1.0);
        }
    }
    LeastSquares { x, rank, conditioning: if smax > 0.0 { smin / smax } else { 0.0 } }
}

/// Largest absolute entry.
pub fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = RMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = RVector::from_vec(vec![2.0, -1.0, 1.0]);
        let ls = min_norm_lstsq(&a, &b, 1e-12);
        assert_eq!(ls.rank, 2);
        assert!((ls.x[0] - 2.0).abs() < 1e-12);
        assert!((ls.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lstsq_is_minimum_norm_when_rank_deficient() {
        // x0 + x1 = 2 has minimum-norm solution (1, 1).
        let a = RMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = RVector::from_vec(vec![2.0]);
        let ls = min_norm_lstsq(&a, &b, 1e-12);
        assert_eq!(ls.rank, 1);
        assert!((ls.x[0] - 1.0).abs() < 1e-12);
        assert!((ls.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_of_duplicate_columns() {
        let a = RMatrix::from_row_slice(3, 3, &[1.0, 2.0, 1.0, 0.0, 1.0, 0.0, 4.0, 5.0, 4.0]);
        assert_eq!(numerical_rank(&a, 1e-10), 2);
    }

    #[test]
    fn split_layout() {
        let m = CMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)]);
        let s = split_re_im(&m);
        assert_eq!(s.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn checked_svd_reconstructs() {
        let m =
            CMatrix::from_fn(5, 3, |i, j| Complex64::new((i * 3 + j) as f64 % 7.0 - 3.0, (i as f64 - j as f64).sin()));
        let svd = checked_svd(&m);
        assert!(svd_error(&m, &svd) <= 1e-13);
        let sv = singular_values(&m);
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        let frob: f64 = sv.iter().map(|s| s * s).sum();
        assert!((frob - m.norm_squared()).abs() <= 1e-12 * frob);
    }
}
