//! Damped Newton on the bordered system
//!
//! ```text
//! (L_h u)_i - lambda u_i + eps w_s(u)_i = 0,   i = 1..n
//! n (||u||_1 - 1)                      = 0
//! ```
//!
//! in the unknowns `(u, lambda)`, where `w_s` is the convex-combination selection of
//! the set-valued map. A solution for any selection solves the inclusion.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bvp::{Discretization, TOL_CONSTRAINT};
use crate::error::Result;
use crate::setvalued::SetValuedMap;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol_newton: f64,
    pub tol_constraint: f64,
    pub max_iters: usize,
    /// Iterations without residual improvement before giving up.
    pub patience: usize,
    /// Number of extra Newton steps taken after the tolerance is met.
    pub polish_steps: usize,
}

impl SolverConfig {
    /// `tol_newton = 1e-10 (1 + ||L_h||_inf)`.
    pub fn for_disc(disc: &Discretization) -> Self {
        let norm_inf = disc
            .l()
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            tol_newton: 1e-10 * (1.0 + norm_inf),
            tol_constraint: TOL_CONSTRAINT,
            max_iters: 50,
            patience: 8,
            polish_steps: 2,
        }
    }
}

/// A solution candidate `(u, eps, lambda)` with convergence metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub u: Vec<f64>,
    pub eps: f64,
    pub lambda: f64,
    pub selection_param: f64,
    pub residual: f64,
    pub newton_iters: usize,
    pub converged: bool,
    /// A singular bordered Jacobian forced a least-squares step at least once.
    pub used_pseudo_inverse: bool,
    /// Residual history, one entry per iterate.
    pub history: Vec<f64>,
}

impl BranchPoint {
    pub fn u_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.u)
    }
}

struct Problem<'a> {
    disc: &'a Discretization,
    map: &'a SetValuedMap,
    eps: f64,
    s: f64,
}

impl Problem<'_> {
    /// Equation residuals (length n) and the unscaled constraint gap.
    fn equations(&self, u: &DVector<f64>, lambda: f64) -> Result<(DVector<f64>, f64)> {
        let mut r = self.disc.l() * u - u * lambda;
        if self.eps != 0.0 {
            r += self.map.make_selection(u, self.s)? * self.eps;
        }
        Ok((r, self.disc.boundary_gap(u)))
    }

    fn merit(&self, r: &DVector<f64>, gap: f64) -> f64 {
        r.amax().max(gap.abs())
    }

    fn scaled(&self, r: &DVector<f64>, gap: f64) -> DVector<f64> {
        let n = r.len();
        let mut out = DVector::zeros(n + 1);
        out.rows_mut(0, n).copy_from(r);
        out[n] = n as f64 * gap;
        out
    }

    fn jacobian(&self, u: &DVector<f64>, lambda: f64) -> Result<DMatrix<f64>> {
        let n = u.len();
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        let mut top = self.disc.l() - DMatrix::identity(n, n) * lambda;
        if self.eps != 0.0 {
            let w0 = self.map.make_selection(u, self.s)?;
            let step = f64::EPSILON.sqrt() * (1.0 + u.amax());
            let mut probe = u.clone();
            for j in 0..n {
                probe[j] += step;
                let w = self.map.make_selection(&probe, self.s)?;
                probe[j] = u[j];
                let col = (w - &w0) * (self.eps / step);
                let mut target = top.column_mut(j);
                target += col;
            }
        }
        jac.view_mut((0, 0), (n, n)).copy_from(&top);
        jac.view_mut((0, n), (n, 1)).copy_from(&(-u));
        let weights = self.disc.quad_weights();
        for j in 0..n {
            let sign = if u[j] > 0.0 {
                1.0
            } else if u[j] < 0.0 {
                -1.0
            } else {
                0.0
            };
            jac[(n, j)] = n as f64 * weights[j] * sign;
        }
        Ok(jac)
    }
}

fn solve_step(jac: &DMatrix<f64>, rhs: &DVector<f64>) -> (Option<DVector<f64>>, bool) {
    if let Some(step) = jac.clone().lu().solve(rhs) {
        if step.iter().all(|v| v.is_finite()) {
            return (Some(step), false);
        }
    }
    let svd = jac.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    (svd.solve(rhs, tol).ok(), true)
}

/// Newton solve of the bordered system from `guess = (u0, lambda0)`.
///
/// Never fails on divergence: the returned point has `converged = false` instead.
pub fn solve_branch_point(
    disc: &Discretization,
    map: &SetValuedMap,
    eps: f64,
    s: f64,
    guess: (&DVector<f64>, f64),
    cfg: &SolverConfig,
) -> Result<BranchPoint> {
    let problem = Problem { disc, map, eps, s };
    let mut u = guess.0.clone();
    let mut lambda = guess.1;
    let (mut r, mut gap) = problem.equations(&u, lambda)?;
    let mut merit = problem.merit(&r, gap);
    let mut history = vec![merit];
    let mut best = merit;
    let mut stalled = 0;
    let mut iters = 0;
    let mut used_pinv = false;
    let mut polish_left = cfg.polish_steps;

    let done = |m: f64, g: f64| m <= cfg.tol_newton && g.abs() <= cfg.tol_constraint;

    while iters < cfg.max_iters {
        if done(merit, gap) {
            if polish_left == 0 || merit == 0.0 {
                break;
            }
            polish_left -= 1;
        }
        let jac = problem.jacobian(&u, lambda)?;
        let rhs = -problem.scaled(&r, gap);
        let (step, pinv) = solve_step(&jac, &rhs);
        used_pinv |= pinv;
        let Some(step) = step else { break };
        let n = u.len();
        let du = step.rows(0, n).into_owned();
        let dl = step[n];

        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-6 {
            let un = &u + &du * t;
            let ln = lambda + dl * t;
            let (rn, gn) = problem.equations(&un, ln)?;
            let mn = problem.merit(&rn, gn);
            if mn.is_finite() && mn <= (1.0 - 1e-4 * t) * merit {
                u = un;
                lambda = ln;
                r = rn;
                gap = gn;
                merit = mn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iters += 1;
        history.push(merit);
        if !accepted {
            break;
        }
        if merit < best {
            best = merit;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= cfg.patience {
                break;
            }
        }
    }

    Ok(BranchPoint {
        u: u.iter().copied().collect(),
        eps,
        lambda,
        selection_param: s,
        residual: merit,
        newton_iters: iters,
        converged: done(merit, gap),
        used_pseudo_inverse: used_pinv,
        history,
    })
}

/// Sup norm of the full system at `point` (equations and unscaled constraint gap).
pub fn residual(disc: &Discretization, map: &SetValuedMap, point: &BranchPoint) -> Result<f64> {
    let problem = Problem {
        disc,
        map,
        eps: point.eps,
        s: point.selection_param,
    };
    let (r, gap) = problem.equations(&point.u_vec(), point.lambda)?;
    Ok(problem.merit(&r, gap))
}

/// Observed convergence order from the last three residuals, if defined.
pub fn observed_order(history: &[f64]) -> Option<f64> {
    let tail: Vec<f64> = history.iter().rev().take(3).rev().copied().collect();
    if tail.len() < 3 || tail.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let (a, b, c) = (tail[0].ln(), tail[1].ln(), tail[2].ln());
    if (b - a).abs() < 1e-300 {
        return None;
    }
    Some((c - b) / (b - a))
}
