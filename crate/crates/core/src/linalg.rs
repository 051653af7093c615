//! Small dense linear-algebra helpers shared by the degree and discretization code.
//!
//! Determinant signs come from our own LU with partial pivoting so that the sign is
//! read off the permutation parity and the pivot signs, never from a rounded product.

use nalgebra::{DMatrix, DVector};

/// Relative threshold used to call a determinant zero.
pub const TOL_SINGULAR: f64 = 1e-12;

/// Outcome of an LU factorization with partial pivoting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetInfo {
    /// Parity of the row permutation times the product of pivot signs.
    /// Zero when an exact zero pivot was met.
    pub sign: i8,
    /// `ln |det|`, `-inf` for an exact zero pivot.
    pub log_abs: f64,
    /// Largest absolute entry of the input, used as the scale for singularity tests.
    pub scale: f64,
    /// Smallest pivot magnitude met during elimination.
    pub min_pivot: f64,
    pub dim: usize,
}

impl DetInfo {
    /// `true` when the smallest pivot is at most `TOL_SINGULAR * scale`.
    ///
    /// Comparing `|det|` with `scale^n` instead would call large, well-posed
    /// operators singular, since `scale^n` overestimates `|det|` by many orders.
    pub fn is_singular(&self) -> bool {
        self.is_singular_with(TOL_SINGULAR)
    }

    pub fn is_singular_with(&self, tol: f64) -> bool {
        self.sign == 0 || self.scale == 0.0 || self.min_pivot <= tol * self.scale
    }

    /// Sign with the singularity tolerance applied.
    pub fn regular_sign(&self) -> i8 {
        if self.is_singular() {
            0
        } else {
            self.sign
        }
    }

    pub fn value(&self) -> f64 {
        f64::from(self.sign) * self.log_abs.exp()
    }
}

/// LU factorization with partial pivoting, returning sign and log-magnitude of the determinant.
///
/// Panics if `m` is not square.
pub fn lu_det(m: &DMatrix<f64>) -> DetInfo {
    assert!(m.is_square(), "lu_det needs a square matrix");
    let n = m.nrows();
    let scale = m.amax();
    let mut a = m.clone();
    let mut sign: i8 = 1;
    let mut log_abs = 0.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (mut piv, mut best) = (k, a[(k, k)].abs());
        for r in (k + 1)..n {
            let v = a[(r, k)].abs();
            if v > best {
                piv = r;
                best = v;
            }
        }
        if best == 0.0 {
            return DetInfo {
                sign: 0,
                log_abs: f64::NEG_INFINITY,
                scale,
                min_pivot: 0.0,
                dim: n,
            };
        }
        if piv != k {
            a.swap_rows(piv, k);
            sign = -sign;
        }
        let p = a[(k, k)];
        if p < 0.0 {
            sign = -sign;
        }
        log_abs += p.abs().ln();
        min_pivot = min_pivot.min(p.abs());
        for r in (k + 1)..n {
            let factor = a[(r, k)] / p;
            if factor != 0.0 {
                for c in (k + 1)..n {
                    let v = a[(k, c)];
                    a[(r, c)] -= factor * v;
                }
            }
        }
    }
    DetInfo {
        sign,
        log_abs,
        scale,
        min_pivot,
        dim: n,
    }
}

/// Sign of the determinant with the default singularity tolerance.
pub fn det_sign(m: &DMatrix<f64>) -> i8 {
    lu_det(m).regular_sign()
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: singular values above `tol_rel * sigma_max`.
pub fn rank(m: &DMatrix<f64>, tol_rel: f64) -> usize {
    let sv = singular_values(m);
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol_rel * top).count()
}

/// Orthonormal basis (columns) of the null space of `m`.
pub fn null_space(m: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    // Pad to a square matrix so the SVD returns the full right singular basis.
    let rows = m.nrows().max(cols);
    let mut sq = DMatrix::zeros(rows, cols);
    sq.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top == 0.0 || svd.singular_values[i] <= tol_rel * top)
        .collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &v_t.row(i).transpose());
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the column span of `basis`.
pub fn orthonormal_complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return DMatrix::identity(basis.nrows(), basis.nrows());
    }
    null_space(&basis.transpose(), 1e-10)
}

/// Least-squares coordinates of `v` in the (full column rank) basis `b`.
pub fn coordinates(b: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let qr = b.clone().qr();
    let qtv = qr.q().transpose() * v;
    qr.r()
        .solve_upper_triangular(&qtv)
        .unwrap_or_else(|| DVector::zeros(b.ncols()))
}

/// Horizontal concatenation `[a | b]`.
pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Negate the first column in place (orientation flip of an ordered basis).
pub fn flip_first_column(m: &mut DMatrix<f64>) {
    if m.ncols() > 0 {
        m.column_mut(0).neg_mut();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_sign_matches_permutation_parity() {
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(lu_det(&swap).sign, -1);
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let info = lu_det(&m);
        assert_eq!(info.sign, 1);
        assert!((info.value() - m.determinant()).abs() < 1e-12);
    }

    #[test]
    fn singular_detection() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(det_sign(&m), 0);
        assert_eq!(det_sign(&DMatrix::<f64>::zeros(3, 3)), 0);
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!((ns[(2, 0)].abs() - 1.0).abs() < 1e-12);
        let comp = orthonormal_complement(&ns);
        assert_eq!(comp.ncols(), 2);
        assert!((ns.transpose() * comp).amax() < 1e-12);
    }

    #[test]
    fn coordinates_in_basis() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let v = &b * DVector::from_vec(vec![0.5, -1.5]);
        let c = coordinates(&b, &v);
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] + 1.5).abs() < 1e-12);
    }
}
