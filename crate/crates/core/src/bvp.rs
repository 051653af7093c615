//! Finite-difference discretization of `L u = u'' + u'` with Neumann closure,
//! `C u = u`, and the `L^1` constraint `||u||_1 = 1`.
//!
//! Grid `t_i = i h`, `h = 1/(n-1)`. Interior rows use second-order central
//! differences; the boundary rows use the mirrored ghost value `u_{-1} = u_1`
//! (resp. `u_n = u_{n-2}`), which makes the central first difference vanish and
//! leaves `2 (u_1 - u_0) / h^2`. Row sums are exactly zero in floating point because
//! every coefficient is built from the integers `(n-1)^2` and `(n-1)/2`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det_sign, hstack, null_space, rank, singular_values};

/// Smallest admissible grid size.
pub const MIN_GRID: usize = 8;
/// Relative singular-value threshold used for kernel and rank decisions.
pub const TOL_RANK_REL: f64 = 1e-9;
/// Tolerance on `| ||u||_1 - 1 |` for membership of the constraint boundary.
pub const TOL_CONSTRAINT: f64 = 1e-9;

/// Which discrete operator plays the role of `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `u'' + u'` with Neumann closure; one-dimensional kernel.
    #[default]
    Standard,
    /// `u'' + u'` with `cos(pi t)` additionally projected into the kernel, so the
    /// kernel is two-dimensional. Used to exhibit the absence of a sign jump.
    EvenKernelToy,
}

#[derive(Debug, Clone)]
pub struct Discretization {
    n: usize,
    h: f64,
    grid: Vec<f64>,
    l: DMatrix<f64>,
    c: DMatrix<f64>,
    quad_weights: DVector<f64>,
    kind: OperatorKind,
}

/// Assemble the standard discretization and verify its structural invariants.
pub fn build(n: usize) -> Result<Discretization> {
    build_with(n, OperatorKind::Standard)
}

pub fn build_with(n: usize, kind: OperatorKind) -> Result<Discretization> {
    if n < MIN_GRID {
        return Err(Error::InvalidParameter(format!("grid size {n} below {MIN_GRID}")));
    }
    let m = (n - 1) as f64;
    let h = 1.0 / m;
    let inv_h2 = m * m;
    let inv_2h = m / 2.0;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();

    let mut l = DMatrix::zeros(n, n);
    l[(0, 0)] = -2.0 * inv_h2;
    l[(0, 1)] = 2.0 * inv_h2;
    l[(n - 1, n - 1)] = -2.0 * inv_h2;
    l[(n - 1, n - 2)] = 2.0 * inv_h2;
    for i in 1..n - 1 {
        l[(i, i - 1)] = inv_h2 - inv_2h;
        l[(i, i)] = -2.0 * inv_h2;
        l[(i, i + 1)] = inv_h2 + inv_2h;
    }
    if kind == OperatorKind::EvenKernelToy {
        // L (I - v v^T / v^T v) with v = cos(pi t); v is orthogonal to constants on this grid.
        let v = DVector::from_iterator(n, grid.iter().map(|t| (std::f64::consts::PI * t).cos()));
        let lv = &l * &v;
        l -= lv * v.transpose() / v.norm_squared();
    }

    let mut quad_weights = DVector::from_element(n, h);
    quad_weights[0] = h / 2.0;
    quad_weights[n - 1] = h / 2.0;

    let disc = Discretization {
        n,
        h,
        grid,
        l,
        c: DMatrix::identity(n, n),
        quad_weights,
        kind,
    };
    disc.verify()?;
    Ok(disc)
}

impl Discretization {
    fn verify(&self) -> Result<()> {
        let ones = DVector::from_element(self.n, 1.0);
        let kernel_residual = (&self.l * &ones).amax();
        let tol = if self.kind == OperatorKind::Standard { 1e-12 } else { 1e-9 * self.l.amax() };
        if kernel_residual > tol {
            return Err(Error::Construction(format!(
                "L_h * 1 has sup norm {kernel_residual:e}"
            )));
        }
        let wsum: f64 = self.quad_weights.sum();
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(Error::Construction(format!("quadrature weights sum to {wsum}")));
        }
        if self.kind == OperatorKind::Standard && self.kernel_dim() != 1 {
            return Err(Error::Construction(format!(
                "kernel dimension {} instead of 1",
                self.kernel_dim()
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Discrete `L`.
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Discrete `C` (identity).
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn quad_weights(&self) -> &DVector<f64> {
        &self.quad_weights
    }

    /// `L_h - lambda C_h`.
    pub fn shifted(&self, lambda: f64) -> DMatrix<f64> {
        &self.l - &self.c * lambda
    }

    /// Number of singular values of `L_h` below `TOL_RANK_REL * sigma_max`.
    pub fn kernel_dim(&self) -> usize {
        self.n - rank(&self.l, TOL_RANK_REL)
    }

    /// Orthonormal kernel basis of `L_h`.
    pub fn kernel_basis(&self) -> DMatrix<f64> {
        null_space(&self.l, TOL_RANK_REL)
    }

    /// Trapezoid integral of a grid function.
    pub fn integrate(&self, f: &DVector<f64>) -> f64 {
        self.quad_weights.dot(f)
    }

    /// Trapezoid `L^1` norm with `|u|` taken nodewise.
    pub fn l1_norm(&self, u: &DVector<f64>) -> f64 {
        self.quad_weights.dot(&u.abs())
    }

    /// `||u||_1 - 1`.
    pub fn boundary_gap(&self, u: &DVector<f64>) -> f64 {
        self.l1_norm(u) - 1.0
    }

    /// `| sum_i w_i f(t_i) e^{t_i} |`, the discrete defect from the range of `L`.
    pub fn image_residual(&self, f: &DVector<f64>) -> f64 {
        self.grid
            .iter()
            .zip(self.quad_weights.iter())
            .zip(f.iter())
            .map(|((t, w), v)| w * v * t.exp())
            .sum::<f64>()
            .abs()
    }

    /// Sample a function on the grid.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> DVector<f64> {
        DVector::from_iterator(self.n, self.grid.iter().map(|&t| f(t)))
    }

    pub fn constant(&self, v: f64) -> DVector<f64> {
        DVector::from_element(self.n, v)
    }
}

/// Image residuals of `L_h u` for `u = sin(2 pi t) - 2 pi t` (which satisfies the
/// Neumann condition) over the given grid sizes, with the least-squares slope of
/// `-log(residual)` against `log(n - 1)`.
pub fn image_convergence(sizes: &[usize]) -> Result<(Vec<f64>, f64)> {
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter("convergence study needs two grid sizes".into()));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut residuals = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let d = build(n)?;
        let u = d.sample(|t| (two_pi * t).sin() - two_pi * t);
        residuals.push(d.image_residual(&(d.l() * u)));
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| ((n - 1) as f64).ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| -r.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok((residuals, sxy / sxx))
}

/// `Omega = { ||u||_1 < 1 }` with trivial solution set `S0 = {+1, -1}`.
#[derive(Debug, Clone)]
pub struct ConstraintRegion<'a> {
    pub disc: &'a Discretization,
    pub tol_constraint: f64,
}

impl<'a> ConstraintRegion<'a> {
    pub fn new(disc: &'a Discretization) -> Self {
        Self {
            disc,
            tol_constraint: TOL_CONSTRAINT,
        }
    }

    pub fn on_boundary(&self, u: &DVector<f64>) -> bool {
        self.disc.boundary_gap(u).abs() <= self.tol_constraint
    }

    pub fn contains(&self, u: &DVector<f64>) -> bool {
        self.disc.l1_norm(u) < 1.0
    }

    pub fn trivial_solutions(&self) -> [DVector<f64>; 2] {
        [self.disc.constant(1.0), self.disc.constant(-1.0)]
    }

    /// Sup-norm distance to `S0` and the nearest member (`+1` or `-1`).
    pub fn dist_to_s0(&self, u: &DVector<f64>) -> (f64, i8) {
        let plus = u.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let minus = u.iter().map(|v| (v + 1.0).abs()).fold(0.0, f64::max);
        if plus <= minus {
            (plus, 1)
        } else {
            (minus, -1)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityReport {
    pub n: usize,
    pub kernel_dim: usize,
    /// `rank([L | C K])` for a kernel basis `K`.
    pub augmented_rank: usize,
    pub transversal: bool,
    /// Largest `b` such that every scanned `0 < |lambda| <= b` gave an invertible `L - lambda C`.
    pub certified_b: f64,
    pub lambda_samples: Vec<f64>,
    pub min_singular_values: Vec<f64>,
}

/// Number of `lambda` samples per side used by the window scan.
pub const WINDOW_SAMPLES: usize = 40;

/// Transversality `im L + C(ker L) = R^n` and the invertibility window of `L - lambda C`.
pub fn transversality_check(disc: &Discretization, lambda_window: f64) -> Result<TransversalityReport> {
    transversality_check_with(disc.l(), disc.c(), lambda_window)
}

/// As [`transversality_check`] for an arbitrary pair `(L, C)`.
pub fn transversality_check_with(
    l: &DMatrix<f64>,
    c: &DMatrix<f64>,
    lambda_window: f64,
) -> Result<TransversalityReport> {
    if !(lambda_window > 0.0) {
        return Err(Error::InvalidParameter("lambda window must be positive".into()));
    }
    let n = l.nrows();
    let kernel = null_space(l, TOL_RANK_REL);
    let augmented = hstack(l, &(c * &kernel));
    let augmented_rank = rank(&augmented, TOL_RANK_REL);
    if augmented_rank < n {
        return Err(Error::Transversality {
            rank: augmented_rank,
            required: n,
        });
    }
    let top = singular_values(l)[0];
    let tol_inv = TOL_RANK_REL * top;
    let mut lambda_samples = Vec::with_capacity(2 * WINDOW_SAMPLES);
    let mut min_singular_values = Vec::with_capacity(2 * WINDOW_SAMPLES);
    let mut side_limit = [lambda_window, lambda_window];
    for (side, sign) in [1.0, -1.0].into_iter().enumerate() {
        let mut prev_sign = 0i8;
        for j in 1..=WINDOW_SAMPLES {
            let lambda = sign * lambda_window * j as f64 / WINDOW_SAMPLES as f64;
            let shifted = l - c * lambda;
            let smin = *singular_values(&shifted).last().unwrap();
            let det = det_sign(&shifted);
            lambda_samples.push(lambda);
            min_singular_values.push(smin);
            // a sign change between samples means an eigenvalue was stepped over
            let crossed = prev_sign != 0 && det != 0 && det != prev_sign;
            if (smin <= tol_inv || crossed) && side_limit[side] == lambda_window {
                side_limit[side] = lambda_window * (j - 1) as f64 / WINDOW_SAMPLES as f64;
            }
            prev_sign = det;
        }
    }
    Ok(TransversalityReport {
        n,
        kernel_dim: kernel.ncols(),
        augmented_rank,
        transversal: true,
        certified_b: side_limit[0].min(side_limit[1]),
        lambda_samples,
        min_singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn image_residual_second_order() {
        let (res, order) = image_convergence(&[16, 32, 64]).unwrap();
        assert!(res[2] < res[0]);
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn small_grid_rejected() {
        assert!(build(7).is_err());
    }

    #[test]
    fn constants_in_kernel() {
        let d = build(16).unwrap();
        assert!((d.l() * d.constant(1.0)).amax() <= 1e-12);
        assert_eq!(d.kernel_dim(), 1);
        let k = d.kernel_basis();
        let spread = k.column(0).max() - k.column(0).min();
        assert!(spread < 1e-10);
    }

    #[test]
    fn stencil_converges_at_second_order() {
        // L cos(pi t) = -pi^2 cos(pi t) - pi sin(pi t); cos(pi t) satisfies the Neumann condition.
        let err = |n: usize| {
            let d = build(n).unwrap();
            let u = d.sample(|t| (PI * t).cos());
            let exact = d.sample(|t| -PI * PI * (PI * t).cos() - PI * (PI * t).sin());
            (d.l() * u - exact).amax()
        };
        let (e16, e32) = (err(16), err(32));
        let rate = (e16 / e32).log2();
        assert!(rate > 1.8, "rate {rate}, errors {e16} {e32}");
    }

    #[test]
    fn l1_norms() {
        let d = build(33).unwrap();
        assert!((d.l1_norm(&d.constant(1.0)) - 1.0).abs() < 1e-15);
        assert!(d.boundary_gap(&d.constant(-1.0)).abs() < 1e-15);
        // trapezoid is exact for linear integrands
        assert!((d.l1_norm(&d.sample(|t| 2.0 * t)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn image_residual_of_constants_and_zero() {
        let d = build(64).unwrap();
        assert_eq!(d.image_residual(&d.constant(0.0)), 0.0);
        let r = d.image_residual(&d.constant(1.0));
        assert!((r - (std::f64::consts::E - 1.0)).abs() < d.h() * d.h());
    }

    #[test]
    fn window_scan_standard() {
        let d = build(16).unwrap();
        let rep = transversality_check(&d, 1.0).unwrap();
        assert!(rep.transversal);
        assert_eq!(rep.augmented_rank, 16);
        assert!(rep.certified_b >= 0.5);
    }

    #[test]
    fn lambda_zero_is_singular() {
        let d = build(16).unwrap();
        assert_eq!(rank(&d.shifted(0.0), TOL_RANK_REL), 15);
    }

    #[test]
    fn constants_into_image_fails() {
        let d = build(16).unwrap();
        // C maps every vector onto a fixed element of im L, so C(ker L) ⊂ im L.
        let in_image = d.l() * d.sample(|t| (PI * t).cos());
        let row = DVector::from_element(16, 1.0 / 16.0);
        let c = in_image * row.transpose();
        let err = transversality_check_with(d.l(), &c, 1.0).unwrap_err();
        assert!(matches!(err, Error::Transversality { rank: 15, required: 16 }));
    }

    #[test]
    fn even_kernel_toy_has_two_dimensional_kernel() {
        let d = build_with(16, OperatorKind::EvenKernelToy).unwrap();
        assert_eq!(d.kernel_dim(), 2);
    }

    #[test]
    fn s0_distance() {
        let d = build(16).unwrap();
        let reg = ConstraintRegion::new(&d);
        let u = d.constant(-0.9);
        let (dist, branch) = reg.dist_to_s0(&u);
        assert!((dist - 0.1).abs() < 1e-15);
        assert_eq!(branch, -1);
        assert!(reg.on_boundary(&d.constant(1.0)));
        assert!(reg.contains(&d.constant(0.5)));
    }
}
