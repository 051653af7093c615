//! Convex, order-interval valued maps on grid functions.
//!
//! Every family here has values of the form `{w : w_lo <= w <= w_hi}` (up to the
//! structural constraints of the family), so a value is stored as its pair of
//! pointwise envelopes. Convex combinations of the envelopes are exact selections.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bvp::Discretization;
use crate::degree::BoxValuedMap;
use crate::error::{Error, Result};
use crate::profile::{PiecewiseBivariate, PiecewisePoly};

/// Range of the state variable on which profile inequalities are sampled at load time.
const PROFILE_CHECK_RANGE: f64 = 4.0;
const PROFILE_CHECK_SAMPLES: usize = 401;

/// Pointwise envelopes of a value `phi(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSet {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl ValueSet {
    /// Sup-norm distance from `w` to the order interval `[lo, hi]`.
    pub fn distance(&self, w: &DVector<f64>) -> f64 {
        crate::degree::box_distance(&self.lo, &self.hi, w)
    }

    pub fn contains(&self, w: &DVector<f64>, tol: f64) -> bool {
        self.distance(w) <= tol
    }
}

/// The three configurable families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Piecewise-affine functions on `0 = t_0 < .. < t_m = 1` with
    /// `u(t_j) - rho <= w(t_j) <= u(t_j) + rho`.
    PiecewiseAffineBounds { nodes: Vec<f64>, rho: f64 },
    /// `f(u) [alpha(mean u), beta(mean u)]`.
    NonlocalInterval {
        f: PiecewisePoly,
        alpha: PiecewisePoly,
        beta: PiecewisePoly,
    },
    /// Primitives `w(t) = int_0^t v` of measurable `v(t) in [alpha(t, u(t)), beta(t, u(t))]`.
    AumannInterval {
        alpha: PiecewiseBivariate,
        beta: PiecewiseBivariate,
    },
}

impl Family {
    pub fn default_piecewise_affine() -> Self {
        Family::PiecewiseAffineBounds {
            nodes: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            rho: 0.5,
        }
    }

    pub fn default_nonlocal() -> Self {
        Family::NonlocalInterval {
            f: PiecewisePoly::constant(1.0),
            alpha: PiecewisePoly::constant(1.0),
            beta: PiecewisePoly::constant(2.0),
        }
    }

    pub fn default_aumann() -> Self {
        Family::AumannInterval {
            alpha: PiecewiseBivariate::constant(1.0),
            beta: PiecewiseBivariate::constant(2.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::PiecewiseAffineBounds { .. } => "piecewise_affine_bounds",
            Family::NonlocalInterval { .. } => "nonlocal_interval",
            Family::AumannInterval { .. } => "aumann_interval",
        }
    }

    /// Check the structural invariants of the family.
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::PiecewiseAffineBounds { nodes, rho } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::InvalidParameter(format!("rho = {rho} not in (0, 1)")));
                }
                if nodes.len() < 2 || nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
                    return Err(Error::InvalidParameter("nodes must start at 0 and end at 1".into()));
                }
                if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParameter("nodes must be strictly increasing".into()));
                }
                Ok(())
            }
            Family::NonlocalInterval { f, alpha, beta } => {
                f.validate()?;
                alpha.validate()?;
                beta.validate()?;
                for k in 0..PROFILE_CHECK_SAMPLES {
                    let s = check_point(k);
                    if alpha.eval(s) > beta.eval(s) {
                        return Err(Error::InvalidParameter(format!("alpha > beta at s = {s}")));
                    }
                }
                Ok(())
            }
            Family::AumannInterval { alpha, beta } => {
                alpha.validate()?;
                beta.validate()?;
                for i in 0..=20 {
                    let t = i as f64 / 20.0;
                    for k in 0..PROFILE_CHECK_SAMPLES {
                        let s = check_point(k);
                        if alpha.eval(t, s) > beta.eval(t, s) {
                            return Err(Error::InvalidParameter(format!(
                                "alpha > beta at (t, s) = ({t}, {s})"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_point(k: usize) -> f64 {
    -PROFILE_CHECK_RANGE + 2.0 * PROFILE_CHECK_RANGE * k as f64 / (PROFILE_CHECK_SAMPLES - 1) as f64
}

/// A family bound to a grid.
#[derive(Debug, Clone)]
pub struct SetValuedMap {
    family: Family,
    grid: Vec<f64>,
    weights: DVector<f64>,
}

impl SetValuedMap {
    pub fn new(family: Family, disc: &Discretization) -> Result<Self> {
        family.validate()?;
        Ok(Self {
            family,
            grid: disc.grid().to_vec(),
            weights: disc.quad_weights().clone(),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    fn check_input(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: u.len(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "grid function" });
        }
        Ok(())
    }

    /// Linear interpolation of a grid function at `t`.
    fn interpolate(&self, u: &DVector<f64>, t: f64) -> f64 {
        let n = self.n();
        let h = self.grid[1] - self.grid[0];
        let pos = (t / h).clamp(0.0, (n - 1) as f64);
        let i = (pos.floor() as usize).min(n - 2);
        let frac = pos - i as f64;
        u[i] * (1.0 - frac) + u[i + 1] * frac
    }

    /// Lower and upper envelopes of `phi(u)` on the grid.
    pub fn eval_extremes(&self, u: &DVector<f64>) -> Result<ValueSet> {
        self.check_input(u)?;
        let n = self.n();
        let (lo, hi) = match &self.family {
            Family::PiecewiseAffineBounds { nodes, rho } => {
                let at_nodes: Vec<f64> = nodes.iter().map(|&t| self.interpolate(u, t)).collect();
                let centre = DVector::from_iterator(
                    n,
                    self.grid.iter().map(|&t| {
                        let k = nodes.partition_point(|&b| b <= t).clamp(1, nodes.len() - 1);
                        let (a, b) = (nodes[k - 1], nodes[k]);
                        let frac = ((t - a) / (b - a)).clamp(0.0, 1.0);
                        at_nodes[k - 1] * (1.0 - frac) + at_nodes[k] * frac
                    }),
                );
                (centre.add_scalar(-rho), centre.add_scalar(*rho))
            }
            Family::NonlocalInterval { f, alpha, beta } => {
                let mean = self.weights.dot(u);
                let (a, b) = (alpha.eval(mean), beta.eval(mean));
                let mut lo = DVector::zeros(n);
                let mut hi = DVector::zeros(n);
                for i in 0..n {
                    let fi = f.eval(u[i]);
                    let (p, q) = (a * fi, b * fi);
                    lo[i] = p.min(q);
                    hi[i] = p.max(q);
                }
                (lo, hi)
            }
            Family::AumannInterval { alpha, beta } => {
                let mut lo = DVector::zeros(n);
                let mut hi = DVector::zeros(n);
                let mut prev_a = alpha.eval(self.grid[0], u[0]);
                let mut prev_b = beta.eval(self.grid[0], u[0]);
                for i in 1..n {
                    let dt = self.grid[i] - self.grid[i - 1];
                    let a = alpha.eval(self.grid[i], u[i]);
                    let b = beta.eval(self.grid[i], u[i]);
                    lo[i] = lo[i - 1] + 0.5 * dt * (prev_a + a);
                    hi[i] = hi[i - 1] + 0.5 * dt * (prev_b + b);
                    prev_a = a;
                    prev_b = b;
                }
                (lo, hi)
            }
        };
        if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "profile evaluation" });
        }
        Ok(ValueSet { lo, hi })
    }

    /// The selection `(1 - s) w_lo + s w_hi`.
    pub fn make_selection(&self, u: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!("selection parameter {s} not in [0, 1]")));
        }
        let v = self.eval_extremes(u)?;
        Ok(v.lo * (1.0 - s) + v.hi * s)
    }

    /// Upper bound on the distance of `(u, w)` to the graph of the map, searched over
    /// coordinate and constant perturbations of `u` within `search_radius`.
    pub fn graph_distance(&self, u: &DVector<f64>, w: &DVector<f64>, search_radius: f64) -> Result<f64> {
        self.check_input(u)?;
        const STEPS: usize = 2;
        let mut best = self.eval_extremes(u)?.distance(w);
        if best == 0.0 || !(search_radius > 0.0) {
            return Ok(best);
        }
        let n = self.n();
        let mut probe = u.clone();
        for k in 1..=STEPS {
            let step = search_radius * k as f64 / STEPS as f64;
            if step >= best {
                break;
            }
            for sign in [1.0, -1.0] {
                for j in 0..=n {
                    if j < n {
                        probe[j] = u[j] + sign * step;
                    } else {
                        probe.copy_from(u);
                        probe.add_scalar_mut(sign * step);
                    }
                    let d = self.eval_extremes(&probe)?.distance(w).max(step);
                    best = best.min(d);
                    if j < n {
                        probe[j] = u[j];
                    } else {
                        probe.copy_from(u);
                    }
                }
            }
        }
        Ok(best)
    }

    /// Sampled one-sided excess `h(delta)` of `phi(u')` over `phi(u)` for `||u' - u|| <= delta`.
    pub fn usc_witness(&self, u: &DVector<f64>, delta_seq: &[f64]) -> Result<UscReport> {
        self.check_input(u)?;
        if delta_seq.is_empty()
            || delta_seq.iter().any(|d| !(*d > 0.0) || !d.is_finite())
            || delta_seq.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(Error::InvalidParameter(
                "delta sequence must be positive and strictly decreasing".into(),
            ));
        }
        let n = self.n();
        let base = self.eval_extremes(u)?;
        let mut directions: Vec<DVector<f64>> = Vec::with_capacity(2 * n + 12);
        for sign in [1.0, -1.0] {
            directions.push(DVector::from_element(n, sign));
            for j in 0..n {
                let mut e = DVector::zeros(n);
                e[j] = sign;
                directions.push(e);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x05c);
        for _ in 0..10 {
            let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let m = d.amax();
            directions.push(d / m);
        }
        let mut excess = Vec::with_capacity(delta_seq.len());
        for &delta in delta_seq {
            let mut worst: f64 = 0.0;
            for d in &directions {
                let v = self.eval_extremes(&(u + d * delta))?;
                let e = (0..n)
                    .map(|i| (base.lo[i] - v.lo[i]).max(v.hi[i] - base.hi[i]).max(0.0))
                    .fold(0.0, f64::max);
                worst = worst.max(e);
            }
            excess.push(worst);
        }
        let monotone_nonincreasing = excess.windows(2).all(|w| w[1] <= w[0] + 1e-14);
        let (first, last) = (excess[0], *excess.last().unwrap());
        let decaying = monotone_nonincreasing && (last <= 1e-14 || last < first);
        let zero_f_on_trajectory = match &self.family {
            Family::NonlocalInterval { f, .. } => u.iter().any(|&v| f.eval(v).abs() <= 1e-14),
            _ => false,
        };
        Ok(UscReport {
            deltas: delta_seq.to_vec(),
            excess,
            monotone_nonincreasing,
            decaying,
            zero_f_on_trajectory,
        })
    }

    /// Whether the zero function belongs to `phi(u)`.
    pub fn contains_zero(&self, u: &DVector<f64>) -> Result<bool> {
        self.check_input(u)?;
        const TOL: f64 = 1e-14;
        Ok(match &self.family {
            // zero is affine, so only the node bounds matter
            Family::PiecewiseAffineBounds { nodes, rho } => nodes.iter().all(|&t| {
                let c = self.interpolate(u, t);
                c - rho <= TOL && c + rho >= -TOL
            }),
            Family::NonlocalInterval { f, alpha, beta } => {
                let mean = self.weights.dot(u);
                u.iter().all(|&v| f.eval(v).abs() <= TOL)
                    || (alpha.eval(mean) <= TOL && beta.eval(mean) >= -TOL)
            }
            // zero = int_0^t 0, so the integrand interval must contain 0 almost everywhere
            Family::AumannInterval { alpha, beta } => self
                .grid
                .iter()
                .zip(u.iter())
                .all(|(&t, &v)| alpha.eval(t, v) <= TOL && beta.eval(t, v) >= -TOL),
        })
    }

    /// Whether `0 ∈ phi(+1)` and `0 ∈ phi(-1)`.
    pub fn zero_membership(&self) -> Result<[bool; 2]> {
        let n = self.n();
        Ok([
            self.contains_zero(&DVector::from_element(n, 1.0))?,
            self.contains_zero(&DVector::from_element(n, -1.0))?,
        ])
    }
}

impl BoxValuedMap for SetValuedMap {
    fn dim(&self) -> usize {
        self.n()
    }

    fn envelopes(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let v = self.eval_extremes(x)?;
        Ok((v.lo, v.hi))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UscReport {
    pub deltas: Vec<f64>,
    pub excess: Vec<f64>,
    pub monotone_nonincreasing: bool,
    pub decaying: bool,
    /// `f(u(t)) = 0` somewhere on the grid (nonlocal family only); the closed-graph
    /// argument for that family needs a point where `f(u(t)) != 0`.
    pub zero_f_on_trajectory: bool,
}
