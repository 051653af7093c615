//! Persistence of the trivial solutions `u = ±1` under small set-valued
//! perturbations: the degree jump of `L - lambda C` across `lambda = 0`, traced
//! eigenvalue and eigenfunction sets over a parameter rectangle, and detection of the
//! bifurcation point they accumulate at.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::bvp::{transversality_check_with, ConstraintRegion, Discretization, TOL_RANK_REL};
use crate::degree::{oriented_linear_degree, DegreeConfig, OrientedOperator};
use crate::error::{Error, Result};
use crate::linalg::{lu_det, null_space};
use crate::setvalued::SetValuedMap;
use crate::solver::{solve_branch_point, BranchPoint, SolverConfig};

/// Width of the `lambda` interval scanned when certifying the invertibility window.
pub const DEFAULT_WINDOW_SCAN: f64 = 1.0;
/// Samples per side of `lambda = 0` for the sign-constancy check.
pub const SIGN_SAMPLES: usize = 21;

/// `[-a, a] x [-b, b]` together with the `eps` samples to trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamRectangle {
    pub a: f64,
    pub b: f64,
    pub eps_grid: Vec<f64>,
    pub certified_b: f64,
    pub lambda_window_certified: bool,
}

impl ParamRectangle {
    /// Rectangle with `eps_count` equispaced samples of `[-a, a]`; `b` must lie in the
    /// certified invertibility window of the discretization.
    pub fn new(disc: &Discretization, a: f64, b: f64, eps_count: usize) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("eps half-width {a} must be finite and >= 0")));
        }
        let grid = if eps_count <= 1 || a == 0.0 {
            vec![0.0]
        } else {
            let m = (eps_count - 1) as f64;
            (0..eps_count).map(|k| a * (2.0 * k as f64 - m) / m).collect()
        };
        Self::with_grid(disc, a, b, grid)
    }

    /// Rectangle with `b` set to half the certified window.
    pub fn auto(disc: &Discretization, a: f64, eps_count: usize) -> Result<Self> {
        let certified = certified_window(disc)?;
        Self::new(disc, a, certified / 2.0, eps_count)
    }

    /// Rectangle over an explicit `eps` grid (sorted and deduplicated here).
    pub fn with_grid(disc: &Discretization, a: f64, b: f64, mut eps_grid: Vec<f64>) -> Result<Self> {
        if eps_grid.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite { what: "eps grid" });
        }
        eps_grid.sort_by(f64::total_cmp);
        eps_grid.dedup();
        let certified_b = certified_window(disc)?;
        if !(b > 0.0 && b <= certified_b) {
            return Err(Error::LambdaWindow { b, certified: certified_b });
        }
        Ok(Self {
            a,
            b,
            eps_grid,
            certified_b,
            lambda_window_certified: true,
        })
    }
}

fn certified_window(disc: &Discretization) -> Result<f64> {
    let report = transversality_check_with(disc.l(), disc.c(), DEFAULT_WINDOW_SCAN)?;
    Ok(report.certified_b)
}

/// The path `lambda -> L - lambda C` oriented by one fixed corrector.
///
/// The corrector is `A = (C K) K^T` for an orthonormal kernel basis `K`, or its
/// reflection when that class makes `L + bC` naturally oriented at the reference `b`.
#[derive(Debug, Clone)]
pub struct OrientedFamily {
    l: DMatrix<f64>,
    c: DMatrix<f64>,
    corrector: DMatrix<f64>,
    f1: DMatrix<f64>,
}

impl OrientedFamily {
    pub fn new(l: &DMatrix<f64>, c: &DMatrix<f64>, b: f64) -> Result<Self> {
        let kernel = null_space(l, TOL_RANK_REL);
        if kernel.ncols() == 0 {
            return Err(Error::InvalidParameter("operator has trivial kernel".into()));
        }
        let report = transversality_check_with(l, c, b)?;
        if report.certified_b < b {
            return Err(Error::LambdaWindow {
                b,
                certified: report.certified_b,
            });
        }
        let f1 = c * &kernel;
        let natural = &f1 * kernel.transpose();
        let mut d = DMatrix::identity(kernel.ncols(), kernel.ncols());
        d[(0, 0)] = -1.0;
        let reflected = &f1 * &d * kernel.transpose();

        let reference = l + c * b;
        let ref_sign = lu_det(&reference).regular_sign();
        let corrected_sign = lu_det(&(&reference + &natural)).regular_sign();
        if ref_sign == 0 || corrected_sign == 0 {
            return Err(Error::NotACorrector);
        }
        let corrector = if ref_sign == corrected_sign { natural } else { reflected };
        Ok(Self {
            l: l.clone(),
            c: c.clone(),
            corrector,
            f1,
        })
    }

    pub fn from_disc(disc: &Discretization, b: f64) -> Result<Self> {
        Self::new(disc.l(), disc.c(), b)
    }

    pub fn corrector(&self) -> &DMatrix<f64> {
        &self.corrector
    }

    /// `L - lambda C`.
    pub fn at(&self, lambda: f64) -> DMatrix<f64> {
        &self.l - &self.c * lambda
    }

    pub fn oriented(&self, lambda: f64) -> Result<OrientedOperator> {
        OrientedOperator::new(self.at(lambda), self.corrector.clone())
    }

    /// Sign of `L - lambda C` in the transported orientation; 0 when singular.
    pub fn sign(&self, lambda: f64) -> Result<i8> {
        let op = self.oriented(lambda)?;
        Ok(crate::degree::operator_sign(&op))
    }

    /// `deg(L - lambda C, U, 0)` on the `L^1` unit ball, computed on the preimage of
    /// `C(ker L)`. Singular operators have no admissible degree and report 0.
    pub fn degree(&self, lambda: f64, weights: &DVector<f64>, cfg: &DegreeConfig) -> Result<i64> {
        let op = self.oriented(lambda)?;
        if lu_det(op.matrix()).is_singular() {
            return Ok(0);
        }
        let inside = |u: &DVector<f64>| u.iter().zip(weights.iter()).map(|(a, w)| a.abs() * w).sum::<f64>() < 1.0;
        let w_min = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let radius = 1.0 / w_min;
        let res = oriented_linear_degree(&op, &self.f1, &inside, radius, cfg)?;
        Ok(res.value)
    }
}

/// `(deg(L + bC, U, 0), deg(L - bC, U, 0))` with `L + bC` naturally oriented.
pub fn degree_jump(disc: &Discretization, b: f64) -> Result<(i64, i64)> {
    degree_jump_with(disc, b, &DegreeConfig::default())
}

pub fn degree_jump_with(disc: &Discretization, b: f64, cfg: &DegreeConfig) -> Result<(i64, i64)> {
    let family = OrientedFamily::from_disc(disc, b)?;
    let w = disc.quad_weights();
    Ok((family.degree(-b, w, cfg)?, family.degree(b, w, cfg)?))
}

/// `deg(L - lambda C, U, 0)` and the sign of `L - lambda C`, both in the orientation
/// used by [`degree_jump`] at half-width `b`.
pub fn degree_at(disc: &Discretization, b: f64, lambda: f64, cfg: &DegreeConfig) -> Result<(i64, i8)> {
    if !lambda.is_finite() {
        return Err(Error::NonFinite { what: "lambda" });
    }
    let family = OrientedFamily::from_disc(disc, b)?;
    Ok((family.degree(lambda, disc.quad_weights(), cfg)?, family.sign(lambda)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignProfile {
    pub lambdas: Vec<f64>,
    pub signs: Vec<i8>,
    pub constant_negative_side: bool,
    pub constant_positive_side: bool,
}

impl SignProfile {
    pub fn constant_each_side(&self) -> bool {
        self.constant_negative_side && self.constant_positive_side
    }
}

/// Sign of `L - lambda C` on `samples` points of `[-b, 0)` and of `(0, b]`.
pub fn sign_profile(family: &OrientedFamily, b: f64, samples: usize) -> Result<SignProfile> {
    let mut lambdas = Vec::with_capacity(2 * samples);
    for k in (1..=samples).rev() {
        lambdas.push(-b * k as f64 / samples as f64);
    }
    for k in 1..=samples {
        lambdas.push(b * k as f64 / samples as f64);
    }
    let signs = lambdas.iter().map(|&l| family.sign(l)).collect::<Result<Vec<_>>>()?;
    let constant = |s: &[i8]| s[0] != 0 && s.iter().all(|v| *v == s[0]);
    Ok(SignProfile {
        constant_negative_side: constant(&signs[..samples]),
        constant_positive_side: constant(&signs[samples..]),
        lambdas,
        signs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Slices are solved outward from `eps = 0`, each seeded by its neighbour.
    #[default]
    Pipelined,
    /// Every slice is solved independently from `u = ±1, lambda = 0`.
    Parallel,
}

#[derive(Debug, Clone)]
pub struct TraceConfig {
    /// Radius of the sup-norm neighbourhood of `S0` in which witnesses are accepted.
    pub c: f64,
    pub s_grid: Vec<f64>,
    /// Excess bound per unit step in `eps`.
    pub usc_slope: f64,
    pub mode: TraceMode,
    pub solver: SolverConfig,
}

impl TraceConfig {
    pub fn new(disc: &Discretization, c: f64, s_count: usize) -> Self {
        Self {
            c,
            s_grid: s_grid(s_count),
            usc_slope: 4.0,
            mode: TraceMode::Pipelined,
            solver: SolverConfig::for_disc(disc),
        }
    }
}

/// `count` equispaced selection parameters in `[0, 1]`.
pub fn s_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..count).map(|k| k as f64 / (count - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSample {
    pub eps: f64,
    pub s: f64,
    pub lambda: f64,
    pub residual: f64,
    pub u_dist_to_s0: f64,
    pub converged: bool,
    /// Nearest trivial solution, `+1` or `-1`.
    pub branch: i8,
    pub newton_iters: usize,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchHull {
    pub branch: i8,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsSlice {
    pub eps: f64,
    /// Accepted witnesses sorted by `(s, lambda)`.
    pub samples: Vec<GammaSample>,
    pub hulls: Vec<BranchHull>,
    pub nonempty: bool,
    /// Warm starts that landed on the other trivial branch.
    pub branch_switches: usize,
    /// Selection parameters for which no witness was accepted.
    pub missing_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcessRow {
    pub eps_from: f64,
    pub eps_to: f64,
    pub excess: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceResult {
    pub rect: ParamRectangle,
    pub c_neighborhood: f64,
    pub s_grid: Vec<f64>,
    pub slices: Vec<EpsSlice>,
    pub gamma_excess: Vec<ExcessRow>,
    pub sigma_excess: Vec<ExcessRow>,
    pub nonempty_all: bool,
}

impl PersistenceResult {
    pub fn slice(&self, eps: f64) -> Option<&EpsSlice> {
        self.slices.iter().find(|s| s.eps == eps)
    }

    /// Distinct `lambda` values of `Gamma(eps)`.
    pub fn gamma(&self, eps: f64) -> Vec<f64> {
        self.slice(eps).map(|s| lambdas(&s.samples)).unwrap_or_default()
    }

    /// Eigenfunction witnesses of `Sigma(eps)`.
    pub fn sigma(&self, eps: f64) -> Vec<&[f64]> {
        self.slice(eps)
            .map(|s| s.samples.iter().map(|p| p.u.as_slice()).collect())
            .unwrap_or_default()
    }

    pub fn max_gamma_excess(&self) -> f64 {
        self.gamma_excess.iter().map(|r| r.excess).fold(0.0, f64::max)
    }

    pub fn usc_within_bound(&self) -> bool {
        self.gamma_excess.iter().all(|r| r.within_bound)
    }

    pub fn failures(&self) -> Vec<f64> {
        self.slices.iter().filter(|s| !s.nonempty).map(|s| s.eps).collect()
    }
}

fn lambdas(samples: &[GammaSample]) -> Vec<f64> {
    let mut out: Vec<f64> = samples.iter().map(|p| p.lambda).collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    out
}

type Seed = (DVector<f64>, f64);

struct Tracer<'a> {
    disc: &'a Discretization,
    map: &'a SetValuedMap,
    rect: &'a ParamRectangle,
    cfg: &'a TraceConfig,
}

impl Tracer<'_> {
    fn cold_seeds(&self) -> Vec<Seed> {
        vec![(self.disc.constant(1.0), 0.0), (self.disc.constant(-1.0), 0.0)]
    }

    fn accept(&self, p: &BranchPoint) -> Option<GammaSample> {
        if !p.converged || p.lambda.abs() > self.rect.b {
            return None;
        }
        let u = p.u_vec();
        let region = ConstraintRegion::new(self.disc);
        if !region.on_boundary(&u) {
            return None;
        }
        let (dist, branch) = region.dist_to_s0(&u);
        if dist > self.cfg.c {
            return None;
        }
        Some(GammaSample {
            eps: p.eps,
            s: p.selection_param,
            lambda: p.lambda,
            residual: p.residual,
            u_dist_to_s0: dist,
            converged: p.converged,
            branch,
            newton_iters: p.newton_iters,
            u: p.u.clone(),
        })
    }

    /// Solve one `(eps, s)` cell from the given seeds; distinct accepted witnesses and
    /// the number of seeds that switched branch.
    fn cell(&self, eps: f64, s: f64, seeds: &[Seed]) -> Result<(Vec<GammaSample>, usize)> {
        let mut found: Vec<GammaSample> = Vec::new();
        let mut switches = 0;
        for (u0, l0) in seeds {
            let p = solve_branch_point(self.disc, self.map, eps, s, (u0, *l0), &self.cfg.solver)?;
            let Some(sample) = self.accept(&p) else { continue };
            let seed_branch = ConstraintRegion::new(self.disc).dist_to_s0(u0).1;
            if sample.branch != seed_branch {
                switches += 1;
            }
            let duplicate = found.iter().any(|q| {
                q.branch == sample.branch
                    && (q.lambda - sample.lambda).abs() <= 1e-9
                    && q.u.iter().zip(&sample.u).all(|(a, b)| (a - b).abs() <= 1e-7)
            });
            if !duplicate {
                found.push(sample);
            }
        }
        Ok((found, switches))
    }

    fn slice(&self, eps: f64, warm: Option<&EpsSlice>) -> Result<EpsSlice> {
        let cells: Vec<Result<(Vec<GammaSample>, usize)>> = self
            .cfg
            .s_grid
            .par_iter()
            .map(|&s| {
                let mut seeds = Vec::new();
                if let Some(prev) = warm {
                    for p in prev.samples.iter().filter(|p| p.s == s) {
                        seeds.push((DVector::from_column_slice(&p.u), p.lambda));
                    }
                }
                seeds.extend(self.cold_seeds());
                self.cell(eps, s, &seeds)
            })
            .collect();
        let mut samples = Vec::new();
        let mut branch_switches = 0;
        let mut missing_s = Vec::new();
        for (cell, &s) in cells.into_iter().zip(&self.cfg.s_grid) {
            let (found, sw) = cell?;
            if found.is_empty() {
                missing_s.push(s);
            }
            branch_switches += sw;
            samples.extend(found);
        }
        samples.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.lambda.total_cmp(&b.lambda)));
        let mut hulls = Vec::new();
        for branch in [-1i8, 1] {
            let on: Vec<f64> = samples.iter().filter(|p| p.branch == branch).map(|p| p.lambda).collect();
            if !on.is_empty() {
                hulls.push(BranchHull {
                    branch,
                    lo: on.iter().copied().fold(f64::INFINITY, f64::min),
                    hi: on.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                });
            }
        }
        Ok(EpsSlice {
            eps,
            nonempty: !samples.is_empty(),
            samples,
            hulls,
            branch_switches,
            missing_s,
        })
    }

    fn run(&self) -> Result<Vec<EpsSlice>> {
        let grid = &self.rect.eps_grid;
        match self.cfg.mode {
            TraceMode::Parallel => grid.par_iter().map(|&e| self.slice(e, None)).collect(),
            TraceMode::Pipelined => {
                let mut out: Vec<Option<EpsSlice>> = vec![None; grid.len()];
                // Outward from the sample nearest zero, each side seeded by its neighbour.
                let start = (0..grid.len())
                    .min_by(|&i, &j| grid[i].abs().total_cmp(&grid[j].abs()))
                    .unwrap_or(0);
                if grid.is_empty() {
                    return Ok(Vec::new());
                }
                let first = self.slice(grid[start], None)?;
                let (up, down) = rayon::join(
                    || self.sweep((start + 1..grid.len()).collect(), &first),
                    || self.sweep((0..start).rev().collect(), &first),
                );
                for (i, s) in up?.into_iter().chain(down?) {
                    out[i] = Some(s);
                }
                out[start] = Some(first);
                Ok(out.into_iter().map(|s| s.expect("every slice traced")).collect())
            }
        }
    }

    fn sweep(&self, order: Vec<usize>, first: &EpsSlice) -> Result<Vec<(usize, EpsSlice)>> {
        let mut out = Vec::with_capacity(order.len());
        let mut prev = first.clone();
        for i in order {
            let s = self.slice(self.rect.eps_grid[i], Some(&prev))?;
            prev = s.clone();
            out.push((i, s));
        }
        Ok(out)
    }
}

fn excess_table<T>(
    slices: &[EpsSlice],
    slope: f64,
    points: impl Fn(&EpsSlice) -> Vec<T>,
    dist: impl Fn(&T, &T) -> f64,
) -> Vec<ExcessRow> {
    slices
        .windows(2)
        .map(|w| {
            let (from, to) = (&w[0], &w[1]);
            let base = points(from);
            let next = points(to);
            let excess = if base.is_empty() {
                if next.is_empty() { 0.0 } else { f64::INFINITY }
            } else {
                next.iter()
                    .map(|q| base.iter().map(|p| dist(q, p)).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max)
            };
            let bound = slope * (to.eps - from.eps).abs();
            ExcessRow {
                eps_from: from.eps,
                eps_to: to.eps,
                excess,
                bound,
                within_bound: excess <= bound + 1e-12,
            }
        })
        .collect()
}

/// Trace `Gamma(eps)` and `Sigma(eps)` over the rectangle.
pub fn trace(
    disc: &Discretization,
    map: &SetValuedMap,
    rect: &ParamRectangle,
    cfg: &TraceConfig,
) -> Result<PersistenceResult> {
    if !(cfg.c > 0.0 && cfg.c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "neighbourhood radius {} must lie in (0, 1) so that it excludes 0",
            cfg.c
        )));
    }
    if cfg.s_grid.is_empty() || cfg.s_grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidParameter("selection grid must be a nonempty subset of [0, 1]".into()));
    }
    if map.n() != disc.n() {
        return Err(Error::Dimension {
            expected: disc.n(),
            got: map.n(),
        });
    }
    let slices = Tracer { disc, map, rect, cfg }.run()?;
    let gamma_excess = excess_table(&slices, cfg.usc_slope, |s| lambdas(&s.samples), |a, b| (a - b).abs());
    let sigma_excess = excess_table(
        &slices,
        cfg.usc_slope,
        |s| s.samples.iter().map(|p| p.u.clone()).collect(),
        |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
    );
    Ok(PersistenceResult {
        rect: rect.clone(),
        c_neighborhood: cfg.c,
        s_grid: cfg.s_grid.clone(),
        nonempty_all: slices.iter().all(|s| s.nonempty),
        slices,
        gamma_excess,
        sigma_excess,
    })
}

/// Eigenvalue persistence set; the same trace also carries the eigenfunctions.
pub fn trace_gamma(
    disc: &Discretization,
    map: &SetValuedMap,
    rect: &ParamRectangle,
    cfg: &TraceConfig,
) -> Result<PersistenceResult> {
    trace(disc, map, rect, cfg)
}

/// Eigenfunction persistence set, read through [`PersistenceResult::sigma`].
pub fn trace_sigma(
    disc: &Discretization,
    map: &SetValuedMap,
    rect: &ParamRectangle,
    cfg: &TraceConfig,
) -> Result<PersistenceResult> {
    trace(disc, map, rect, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BifurcationStatus {
    Detected,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub eps: f64,
    pub s: f64,
    pub lambda: f64,
    pub dist: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationReport {
    pub status: BifurcationStatus,
    /// Trivial solution the witnesses accumulate at.
    pub point: Option<i8>,
    pub witnesses: Vec<Witness>,
    /// Every witness has `dist <= 10 eps` and `|lambda| <= 3 eps`.
    pub within_bounds: bool,
    /// `|lambda_n|` and `dist_n` do not increase along the sequence (up to slack).
    pub monotone: bool,
    /// Extrapolated values at `eps = 0`.
    pub lambda_limit: Option<f64>,
    pub dist_limit: Option<f64>,
    pub reason: Option<String>,
}

impl BifurcationReport {
    fn inconclusive(reason: &str, witnesses: Vec<Witness>) -> Self {
        Self {
            status: BifurcationStatus::Inconclusive,
            point: None,
            witnesses,
            within_bounds: false,
            monotone: false,
            lambda_limit: None,
            dist_limit: None,
            reason: Some(reason.into()),
        }
    }
}

/// Tolerance on the extrapolated limits.
pub const LIMIT_TOL: f64 = 1e-6;

/// Least-squares value at `x = 0` of a polynomial fit (linear for two points,
/// quadratic otherwise).
fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> Option<f64> {
    let degree = if x.len() >= 3 { 2 } else { 1 };
    if x.len() < 2 {
        return None;
    }
    let a = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    let rhs = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&rhs, 1e-14).ok()?;
    Some(sol[0])
}

/// Look for nontrivial solutions accumulating at `S0` along `eps_seq -> 0`.
pub fn detect_bifurcation(
    disc: &Discretization,
    map: &SetValuedMap,
    eps_seq: &[f64],
    cfg: &TraceConfig,
) -> Result<BifurcationReport> {
    if eps_seq.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite { what: "eps sequence" });
    }
    let eps: Vec<f64> = eps_seq.iter().copied().filter(|e| *e != 0.0).collect();
    if eps.is_empty() {
        return Ok(BifurcationReport::inconclusive(
            "no nonzero eps: only trivial solutions",
            Vec::new(),
        ));
    }
    let b = certified_window(disc)?;
    let rect = ParamRectangle {
        a: eps.iter().map(|e| e.abs()).fold(0.0, f64::max),
        b,
        eps_grid: eps.clone(),
        certified_b: b,
        lambda_window_certified: true,
    };
    let tracer = Tracer {
        disc,
        map,
        rect: &rect,
        cfg,
    };
    let slices = eps
        .par_iter()
        .map(|&e| tracer.slice(e, None))
        .collect::<Result<Vec<_>>>()?;

    let Some(branch) = [1i8, -1]
        .into_iter()
        .find(|br| slices.iter().all(|s| s.samples.iter().any(|p| p.branch == *br)))
    else {
        return Ok(BifurcationReport::inconclusive(
            "no branch has a witness for every eps",
            Vec::new(),
        ));
    };
    let witnesses: Vec<Witness> = slices
        .iter()
        .map(|s| {
            let p = s
                .samples
                .iter()
                .filter(|p| p.branch == branch)
                .min_by(|a, b| a.lambda.abs().total_cmp(&b.lambda.abs()))
                .expect("branch has a witness");
            Witness {
                eps: s.eps,
                s: p.s,
                lambda: p.lambda,
                dist: p.u_dist_to_s0,
                residual: p.residual,
            }
        })
        .collect();

    let within_bounds = witnesses
        .iter()
        .all(|w| w.dist <= 10.0 * w.eps.abs() && w.lambda.abs() <= 3.0 * w.eps.abs());
    let slack = cfg.solver.tol_newton;
    let mut by_size: Vec<&Witness> = witnesses.iter().collect();
    by_size.sort_by(|a, b| b.eps.abs().total_cmp(&a.eps.abs()));
    let monotone = by_size.windows(2).all(|w| {
        w[1].lambda.abs() <= w[0].lambda.abs() + slack && w[1].dist <= w[0].dist + slack
    });
    let xs: Vec<f64> = witnesses.iter().map(|w| w.eps).collect();
    let lambda_limit = extrapolate_to_zero(&xs, &witnesses.iter().map(|w| w.lambda).collect::<Vec<_>>());
    let dist_limit = extrapolate_to_zero(&xs, &witnesses.iter().map(|w| w.dist).collect::<Vec<_>>());
    let limits_ok = matches!((lambda_limit, dist_limit), (Some(l), Some(d)) if l.abs() <= LIMIT_TOL && d.abs() <= LIMIT_TOL);

    let detected = within_bounds && monotone && limits_ok;
    let reason = if detected {
        None
    } else if lambda_limit.is_none() {
        Some("at least two nonzero eps are needed to extrapolate".to_string())
    } else {
        Some(format!(
            "bounds {within_bounds}, monotone {monotone}, limits ({:?}, {:?})",
            lambda_limit, dist_limit
        ))
    };
    Ok(BifurcationReport {
        status: if detected {
            BifurcationStatus::Detected
        } else {
            BifurcationStatus::Inconclusive
        },
        point: detected.then_some(branch),
        witnesses,
        within_bounds,
        monotone,
        lambda_limit,
        dist_limit,
        reason,
    })
}
