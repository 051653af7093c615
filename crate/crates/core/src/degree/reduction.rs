//! Reduction of the degree to the preimage of a finite-dimensional subspace.
//!
//! Given a linear `L` transverse to `F1` and a map `f` with `f - L` valued in `F1`,
//! the degree of `f` equals the degree of its restriction to `M1 = L^{-1}(F1)`,
//! provided `M1` carries the orientation induced from `F1`:
//! with `E0` a complement of `M1` and `F0 = L(E0)`, `F0` is oriented so that
//! `(F0, F1)` is positive in `R^n`, `E0` so that `L|E0` preserves orientation, and
//! `M1` so that `(E0, M1)` is positive.

use nalgebra::{DMatrix, DVector};

use super::brouwer::{brouwer_degree, degree_on_domain, DegreeConfig, DegreeResult};
use super::field::{Region, VectorField};
use super::orientation::OrientedOperator;
use crate::error::{Error, Result};
use crate::linalg::{
    coordinates, det_sign, flip_first_column, hstack, null_space, orthonormal_complement, rank,
};

const TOL_RANK: f64 = 1e-10;

/// Oriented bases of the preimage `M1` and of `F1` (columns).
#[derive(Debug, Clone)]
pub struct OrientedPreimage {
    pub m1: DMatrix<f64>,
    pub f1: DMatrix<f64>,
}

fn check_transverse(l: &DMatrix<f64>, f1: &DMatrix<f64>) -> Result<()> {
    if f1.nrows() != l.nrows() {
        return Err(Error::Dimension {
            expected: l.nrows(),
            got: f1.nrows(),
        });
    }
    let n = l.nrows();
    let r = rank(&hstack(l, f1), TOL_RANK);
    if r < n {
        return Err(Error::Transversality { rank: r, required: n });
    }
    if rank(f1, TOL_RANK) < f1.ncols() {
        return Err(Error::InvalidParameter("F1 basis is not linearly independent".into()));
    }
    Ok(())
}

/// `L^{-1}(F1)` as an orthonormal basis.
fn preimage_basis(l: &DMatrix<f64>, f1: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q_perp = orthonormal_complement(f1);
    let m1 = if q_perp.ncols() == 0 {
        DMatrix::identity(l.ncols(), l.ncols())
    } else {
        null_space(&(q_perp.transpose() * l), TOL_RANK)
    };
    if m1.ncols() != f1.ncols() {
        return Err(Error::Transversality {
            rank: m1.ncols(),
            required: f1.ncols(),
        });
    }
    Ok(m1)
}

/// Orientation of `L^{-1}(F1)` induced by the standard orientation of `R^n` and the
/// orientation of `F1` given by the column order of `f1`.
pub fn oriented_preimage(l: &DMatrix<f64>, f1: &DMatrix<f64>) -> Result<OrientedPreimage> {
    check_transverse(l, f1)?;
    let mut m1 = preimage_basis(l, f1)?;
    let mut f1 = f1.clone();
    let mut e0 = orthonormal_complement(&m1);
    if e0.ncols() == 0 {
        // F1 is the whole space, so its orientation must agree with R^n.
        if det_sign(&f1) < 0 {
            flip_first_column(&mut f1);
        }
    } else {
        let f0 = l * &e0;
        if det_sign(&hstack(&f0, &f1)) < 0 {
            flip_first_column(&mut e0);
        }
    }
    if det_sign(&hstack(&e0, &m1)) < 0 {
        flip_first_column(&mut m1);
    }
    Ok(OrientedPreimage { m1, f1 })
}

/// Orientation of `T^{-1}(F1)` induced by an oriented operator `T` and the orientation
/// of `F1`: pick a positive corrector acting only on the preimage with image in `F1`,
/// then orient the preimage so that `(T + A)|M1 : M1 -> F1` preserves orientation.
pub fn fredholm_oriented_preimage(op: &OrientedOperator, f1: &DMatrix<f64>) -> Result<OrientedPreimage> {
    let t = op.matrix();
    check_transverse(t, f1)?;
    let mut m1 = preimage_basis(t, f1)?;
    let k = f1.ncols();
    // T restricted to M1, in coordinates of the F1 basis.
    let t_m = t * &m1;
    let mut t11 = DMatrix::zeros(k, k);
    for j in 0..k {
        t11.set_column(j, &coordinates(f1, &t_m.column(j).into_owned()));
    }
    // Block corrector A = F1 K M1^T with T11 + K = D, D = I or diag(-1, 1, ..).
    let block = |d: &DMatrix<f64>| f1 * (d - &t11) * m1.transpose();
    let identity = DMatrix::identity(k, k);
    let mut reflect = identity.clone();
    if k > 0 {
        reflect[(0, 0)] = -1.0;
    }
    let positive_with_identity = op.is_positive(&block(&identity))?;
    if !positive_with_identity {
        if !op.is_positive(&block(&reflect))? {
            return Err(Error::Orientation("no block corrector in the positive class".into()));
        }
        // (T + A)|M1 has matrix diag(-1, 1, ..): reverse M1 to make it orientation-preserving.
        flip_first_column(&mut m1);
    }
    Ok(OrientedPreimage {
        m1,
        f1: f1.clone(),
    })
}

/// `c -> coords_F1(f(M1 c))` on the oriented preimage.
pub struct ReducedField<'a> {
    f: &'a dyn VectorField,
    m1: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl<'a> ReducedField<'a> {
    pub fn new(f: &'a dyn VectorField, pre: &OrientedPreimage) -> Result<Self> {
        let gram = pre.f1.transpose() * &pre.f1;
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("F1 basis is degenerate".into()))?;
        Ok(Self {
            f,
            m1: pre.m1.clone(),
            pinv: inv * pre.f1.transpose(),
        })
    }

    pub fn lift(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.m1 * c
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.pinv * v
    }
}

impl VectorField for ReducedField<'_> {
    fn dim(&self) -> usize {
        self.m1.ncols()
    }

    fn eval(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.pinv * self.f.eval(&self.lift(c))
    }

    fn jacobian(&self, c: &DVector<f64>) -> DMatrix<f64> {
        &self.pinv * self.f.jacobian(&self.lift(c)) * &self.m1
    }
}

/// Sup-norm distance from `v` to the span of `basis`.
fn subspace_residual(basis: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let c = coordinates(basis, v);
    (v - basis * c).amax()
}

/// Degree of the restriction of `f` to the oriented preimage, over `region ∩ M1`.
pub fn reduced_degree(
    f: &dyn VectorField,
    pre: &OrientedPreimage,
    inside: &(dyn Fn(&DVector<f64>) -> bool + Sync),
    radius: f64,
    y: &DVector<f64>,
    cfg: &DegreeConfig,
) -> Result<DegreeResult> {
    let reduced = ReducedField::new(f, pre)?;
    let k = reduced.dim();
    let seed_box = Region::cube(k, radius)?;
    let y_c = reduced.project(y);
    let lifted_inside = |c: &DVector<f64>| inside(&reduced.lift(c));
    degree_on_domain(&reduced, &seed_box, &lifted_inside, &y_c, cfg)
}

/// Full-space degree of `f` on `region` and the degree of its restriction to
/// `M1 = L^{-1}(F1)`; both are returned so callers can compare them.
pub fn reduction_check(
    l: &DMatrix<f64>,
    f1: &DMatrix<f64>,
    f: &dyn VectorField,
    y: &DVector<f64>,
    region: &Region,
    tol_subspace: f64,
    cfg: &DegreeConfig,
) -> Result<(DegreeResult, DegreeResult)> {
    let pre = oriented_preimage(l, f1)?;
    let y_res = subspace_residual(&pre.f1, y);
    if y_res > tol_subspace {
        return Err(Error::Subspace {
            residual: y_res,
            tol: tol_subspace,
        });
    }
    let probes = region.halton_points(64);
    for x in probes.iter().chain(region.boundary_samples(3).iter()) {
        let d = f.eval(x) - l * x;
        let res = subspace_residual(&pre.f1, &d);
        if res > tol_subspace * (1.0 + d.amax()) {
            return Err(Error::Subspace {
                residual: res,
                tol: tol_subspace,
            });
        }
    }
    let full = brouwer_degree(f, region, y, cfg)?;
    let radius = region
        .lo()
        .iter()
        .zip(region.hi().iter())
        .map(|(a, b)| a.abs().max(b.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let reduced = reduced_degree(f, &pre, &|x| region.contains_open(x), radius, y, cfg)?;
    Ok((full, reduced))
}

/// Degree of an oriented linear operator on a neighbourhood of 0, computed on the
/// oriented preimage of `F1`. Equals the operator sign for invertible operators.
pub fn oriented_linear_degree(
    op: &OrientedOperator,
    f1: &DMatrix<f64>,
    inside: &(dyn Fn(&DVector<f64>) -> bool + Sync),
    radius: f64,
    cfg: &DegreeConfig,
) -> Result<DegreeResult> {
    let pre = fredholm_oriented_preimage(op, f1)?;
    let field = super::field::AffineField::linear(op.matrix().clone());
    reduced_degree(&field, &pre, inside, radius, &DVector::zeros(op.dim()), cfg)
}
