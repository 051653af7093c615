//! Correctors, L-equivalence and the sign of an oriented operator.
//!
//! In finite dimension every square matrix is Fredholm of index zero, and a corrector
//! of `L` is any matrix `A` with `L + A` invertible. Two correctors are L-equivalent
//! when `det((L + B)^{-1} (L + A)) > 0`; an orientation is one of the two classes and
//! is stored here through a representative.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{lu_det, DetInfo};

fn corrected(l: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DetInfo> {
    if l.shape() != a.shape() || !l.is_square() {
        return Err(Error::Dimension {
            expected: l.nrows(),
            got: a.nrows(),
        });
    }
    let info = lu_det(&(l + a));
    if info.is_singular() {
        return Err(Error::NotACorrector);
    }
    Ok(info)
}

/// `det((L + B)^{-1} (L + A))`, computed as a ratio of LU determinants.
pub fn corrector_det(l: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let da = corrected(l, a)?;
    let db = corrected(l, b)?;
    let sign = f64::from(da.sign * db.sign);
    Ok(sign * (da.log_abs - db.log_abs).exp())
}

/// `true` iff `A` and `B` lie in the same orientation class of `L`.
pub fn l_equivalent(l: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    let da = corrected(l, a)?;
    let db = corrected(l, b)?;
    Ok(da.sign * db.sign > 0)
}

/// A square operator with a chosen orientation, stored as a positive corrector.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedOperator {
    matrix: DMatrix<f64>,
    positive_corrector: DMatrix<f64>,
}

impl OrientedOperator {
    /// Orient `matrix` by the class of `corrector`.
    pub fn new(matrix: DMatrix<f64>, corrector: DMatrix<f64>) -> Result<Self> {
        corrected(&matrix, &corrector)?;
        Ok(Self {
            matrix,
            positive_corrector: corrector,
        })
    }

    /// The natural orientation of an invertible operator (the class containing 0).
    pub fn naturally_oriented(matrix: DMatrix<f64>) -> Result<Self> {
        let zero = DMatrix::zeros(matrix.nrows(), matrix.ncols());
        Self::new(matrix, zero).map_err(|_| {
            Error::Orientation("natural orientation requires an invertible operator".into())
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn positive_corrector(&self) -> &DMatrix<f64> {
        &self.positive_corrector
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Whether `a` is a positive corrector for this orientation.
    pub fn is_positive(&self, a: &DMatrix<f64>) -> Result<bool> {
        l_equivalent(&self.matrix, a, &self.positive_corrector)
    }

    /// Same operator, opposite orientation.
    ///
    /// Uses a corrector in the other class, built by flipping the action of the
    /// stored corrector on one direction.
    pub fn reversed(&self) -> Result<Self> {
        let n = self.dim();
        let base = &self.matrix + &self.positive_corrector;
        // Reflect one column of L + A: (L + A) R with R = I - 2 e e^T gives det of opposite sign.
        let mut reflected = base.clone();
        reflected.column_mut(0).neg_mut();
        let corrector = reflected - &self.matrix;
        let out = Self::new(self.matrix.clone(), corrector)?;
        debug_assert!(n == 0 || !out.is_positive(&self.positive_corrector)?);
        Ok(out)
    }
}

/// `+1` for a naturally oriented isomorphism, `-1` for the other orientation,
/// `0` when the operator is singular.
pub fn operator_sign(op: &OrientedOperator) -> i8 {
    let info = lu_det(op.matrix());
    if info.is_singular() {
        return 0;
    }
    let corr = lu_det(&(op.matrix() + op.positive_corrector()));
    if info.sign * corr.sign > 0 {
        1
    } else {
        -1
    }
}
