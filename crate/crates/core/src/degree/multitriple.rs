//! Degree of admissible multitriples `(g, U, phi)` with box-valued `phi`.
//!
//! The coincidence degree is the Brouwer degree of `g - f` for a continuous
//! `f` close to `phi` in the graph sense. Approximations are built from the convex
//! combination of the envelopes plus a bounded smooth wobble of size `eps`, so two
//! independent approximations genuinely differ; their degrees must agree.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::brouwer::{brouwer_degree, DegreeConfig, DegreeMethod, DegreeResult};
use super::field::{Region, VectorField};
use crate::error::{Error, Result};

/// A map `R^n -> boxes`: every value is the order interval `[lo(x), hi(x)]`.
pub trait BoxValuedMap: Sync {
    fn dim(&self) -> usize;

    fn envelopes(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)>;

    /// Sup-norm distance from `v` to the value at `x`.
    fn distance_to_value(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let (lo, hi) = self.envelopes(x)?;
        Ok(box_distance(&lo, &hi, v))
    }
}

pub fn box_distance(lo: &DVector<f64>, hi: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (0..v.len())
        .map(|i| (lo[i] - v[i]).max(v[i] - hi[i]).max(0.0))
        .fold(0.0, f64::max)
}

/// Constant box `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct ConstantBox {
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl BoxValuedMap for ConstantBox {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn envelopes(&self, _x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        Ok((self.lo.clone(), self.hi.clone()))
    }
}

/// Single-valued map seen as a degenerate box-valued one.
pub struct Singleton<'a>(pub &'a dyn VectorField);

impl BoxValuedMap for Singleton<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn envelopes(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        let v = self.0.eval(x);
        Ok((v.clone(), v))
    }
}

/// Orientation of the derivative field of `g` relative to the standard one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOrientation {
    Natural,
    Reversed,
}

impl FieldOrientation {
    fn factor(self) -> i64 {
        match self {
            FieldOrientation::Natural => 1,
            FieldOrientation::Reversed => -1,
        }
    }
}

/// `(g, U, phi)` with a verified margin between the coincidence set and `boundary U`.
pub struct AdmissibleTriple<'a> {
    g: &'a dyn VectorField,
    region: Region,
    phi: &'a dyn BoxValuedMap,
    orientation: FieldOrientation,
    margin: f64,
}

impl<'a> AdmissibleTriple<'a> {
    /// Samples the boundary with `per_dim` points per axis and requires
    /// `dist(g(x), phi(x)) >= tol_margin` there.
    pub fn new(
        g: &'a dyn VectorField,
        region: Region,
        phi: &'a dyn BoxValuedMap,
        orientation: FieldOrientation,
        per_dim: usize,
        tol_margin: f64,
    ) -> Result<Self> {
        for got in [g.dim(), phi.dim()] {
            if got != region.dim() {
                return Err(Error::Dimension {
                    expected: region.dim(),
                    got,
                });
            }
        }
        let mut margin = f64::INFINITY;
        for x in region.boundary_samples(per_dim) {
            let d = phi.distance_to_value(&x, &g.eval(&x))?;
            if !d.is_finite() {
                return Err(Error::NonFinite { what: "coincidence distance" });
            }
            margin = margin.min(d);
        }
        if margin < tol_margin {
            return Err(Error::Admissibility {
                margin,
                required: tol_margin,
            });
        }
        Ok(Self {
            g,
            region,
            phi,
            orientation,
            margin,
        })
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn region(&self) -> &Region {
        &self.region
    }
}

/// `x -> (1 - s) lo(x) + s hi(x) + eps * sin(W x + theta)`.
pub struct Approximation<'a> {
    phi: &'a dyn BoxValuedMap,
    s: f64,
    eps: f64,
    freq: DMatrix<f64>,
    phase: DVector<f64>,
}

impl<'a> Approximation<'a> {
    pub fn random(phi: &'a dyn BoxValuedMap, eps: f64, rng: &mut ChaCha8Rng) -> Self {
        let n = phi.dim();
        Self {
            phi,
            s: rng.gen(),
            eps,
            freq: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0)),
            phase: DVector::from_fn(n, |_, _| rng.gen_range(0.0..TAU)),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (lo, hi) = self.phi.envelopes(x)?;
        let wobble = (&self.freq * x + &self.phase).map(f64::sin);
        Ok(lo * (1.0 - self.s) + hi * self.s + wobble * self.eps)
    }
}

struct Difference<'a> {
    g: &'a dyn VectorField,
    f: &'a Approximation<'a>,
}

impl VectorField for Difference<'_> {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self.f.eval(x) {
            Ok(v) => self.g.eval(x) - v,
            Err(_) => DVector::from_element(self.dim(), f64::NAN),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiConfig {
    pub degree: DegreeConfig,
    pub max_halvings: usize,
    pub seed: u64,
}

impl Default for MultiConfig {
    fn default() -> Self {
        Self {
            degree: DegreeConfig::default(),
            max_halvings: 8,
            seed: 0xa11ce,
        }
    }
}

/// Degree of the multitriple, via two independent `eps`-approximations of `phi`.
///
/// `eps` starts at `min(eps_approx, margin / 4)` and is halved until both
/// approximations give the same degree.
pub fn multitriple_degree(t: &AdmissibleTriple<'_>, eps_approx: f64, cfg: &MultiConfig) -> Result<DegreeResult> {
    if !(eps_approx > 0.0) {
        return Err(Error::InvalidParameter("eps_approx must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut eps = eps_approx.min(t.margin / 4.0);
    let mut inner = cfg.degree.clone();
    inner.tol_boundary = inner.tol_boundary.min(t.margin / 2.0);
    let zero = DVector::zeros(t.region.dim());
    for _ in 0..=cfg.max_halvings {
        let first = Approximation::random(t.phi, eps, &mut rng);
        let second = Approximation::random(t.phi, eps, &mut rng);
        let d1 = brouwer_degree(&Difference { g: t.g, f: &first }, &t.region, &zero, &inner)?;
        let d2 = brouwer_degree(&Difference { g: t.g, f: &second }, &t.region, &zero, &inner)?;
        if d1.value == d2.value {
            let factor = t.orientation.factor();
            let mut out = d1;
            out.value *= factor;
            for c in &mut out.certificate {
                c.sign *= factor as i8;
            }
            out.method = DegreeMethod::ApproximationRegularValueCount;
            return Ok(out);
        }
        eps /= 2.0;
    }
    Err(Error::EpsTooLarge {
        eps,
        halvings: cfg.max_halvings,
    })
}
