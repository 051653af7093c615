//! Brouwer degree by signed counting of preimages of a regular value.
//!
//! Preimages are enumerated with damped Newton started from a Halton seed set.
//! When the target is not a regular value it is replaced by nearby random targets
//! and every retry has to report the same integer.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::field::{Region, VectorField};
use crate::error::{Error, Result};
use crate::linalg::{lu_det, TOL_SINGULAR};

/// How a [`DegreeResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DegreeMethod {
    RegularValueCount,
    ApproximationRegularValueCount,
}

/// A preimage together with the sign of the Jacobian determinant there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificatePoint {
    pub x: Vec<f64>,
    pub sign: i8,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeResult {
    pub value: i64,
    pub method: DegreeMethod,
    pub certificate: Vec<CertificatePoint>,
    /// The target actually used when the requested one was not regular.
    pub perturbation_used: Option<Vec<f64>>,
}

impl DegreeResult {
    pub fn certificate_sum(&self) -> i64 {
        self.certificate.iter().map(|c| i64::from(c.sign)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct DegreeConfig {
    /// Required distance between `y` and `g(boundary)`; also twice the perturbation size.
    pub tol_boundary: f64,
    /// Residual below which a Newton iterate is accepted as a preimage.
    pub tol_root: f64,
    /// Seeds per axis; `None` picks a default by dimension.
    pub seeds_per_dim: Option<usize>,
    pub max_newton: usize,
    /// Number of perturbed targets tried when `y` is not regular.
    pub retries: usize,
    pub boundary_samples_per_dim: usize,
    /// Optional Lipschitz constant of `g`, used to bound the margin between samples.
    pub lipschitz: Option<f64>,
    pub seed: u64,
}

impl Default for DegreeConfig {
    fn default() -> Self {
        Self {
            tol_boundary: 1e-3,
            tol_root: 1e-10,
            seeds_per_dim: None,
            max_newton: 60,
            retries: 5,
            boundary_samples_per_dim: 33,
            lipschitz: None,
            seed: 0x5eed,
        }
    }
}

impl DegreeConfig {
    fn seed_count(&self, dim: usize) -> usize {
        let per = self.seeds_per_dim.unwrap_or(match dim {
            1 => 64,
            2 => 24,
            3 => 12,
            4 => 7,
            _ => 5,
        });
        per.saturating_pow(dim as u32).max(per)
    }
}

/// Sign of `det Dg(x)`; zero only when the determinant is numerically singular.
pub fn jacobian_sign(g: &dyn VectorField, x: &DVector<f64>) -> Result<i8> {
    let jac = g.jacobian(x);
    sign_of_jacobian(&jac)
}

fn sign_of_jacobian(jac: &DMatrix<f64>) -> Result<i8> {
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "jacobian" });
    }
    let info = lu_det(jac);
    if info.sign == 0 {
        return Ok(0);
    }
    // Floor the scale at one so tiny but well-conditioned Jacobians are not called singular.
    let scale = info.scale.max(1.0);
    let threshold = TOL_SINGULAR.ln() + info.dim as f64 * scale.ln();
    Ok(if info.log_abs <= threshold { 0 } else { info.sign })
}

/// Smallest sup-norm distance between `y` and `g` on sampled boundary points.
pub fn boundary_margin(g: &dyn VectorField, region: &Region, y: &DVector<f64>, per_dim: usize) -> f64 {
    region
        .boundary_samples(per_dim)
        .par_iter()
        .map(|x| (g.eval(x) - y).amax())
        .reduce(|| f64::INFINITY, f64::min)
}

/// Brouwer degree `deg(g, region, y)`.
pub fn brouwer_degree(
    g: &dyn VectorField,
    region: &Region,
    y: &DVector<f64>,
    cfg: &DegreeConfig,
) -> Result<DegreeResult> {
    check_dims(g, region, y)?;
    let sampled = boundary_margin(g, region, y, cfg.boundary_samples_per_dim);
    if !sampled.is_finite() {
        return Err(Error::NonFinite { what: "boundary values" });
    }
    let margin = match cfg.lipschitz {
        Some(lip) => {
            let gap = region.boundary_spacing(cfg.boundary_samples_per_dim)
                * ((region.dim() as f64 - 1.0).max(1.0)).sqrt()
                * 0.5;
            sampled - lip * gap
        }
        None => sampled,
    };
    if margin < cfg.tol_boundary {
        return Err(Error::Admissibility {
            margin,
            required: cfg.tol_boundary,
        });
    }
    degree_on_domain(g, region, &|x| region.contains_open(x), y, cfg)
}

/// Degree counting only preimages accepted by `inside`, seeding from `seed_box`.
///
/// No boundary check is made; callers establish admissibility themselves.
pub(crate) fn degree_on_domain(
    g: &dyn VectorField,
    seed_box: &Region,
    inside: &(dyn Fn(&DVector<f64>) -> bool + Sync),
    y: &DVector<f64>,
    cfg: &DegreeConfig,
) -> Result<DegreeResult> {
    check_dims(g, seed_box, y)?;
    match count_preimages(g, seed_box, inside, y, cfg)? {
        Attempt::Regular(cert) => Ok(finish(cert, None)),
        Attempt::Singular => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let radius = cfg.tol_boundary / 2.0;
            let mut agreed: Option<DegreeResult> = None;
            for _ in 0..cfg.retries.max(1) {
                let y_pert = perturb(y, radius, &mut rng);
                if let Attempt::Regular(cert) = count_preimages(g, seed_box, inside, &y_pert, cfg)? {
                    let res = finish(cert, Some(y_pert.iter().copied().collect()));
                    match &agreed {
                        None => agreed = Some(res),
                        Some(prev) if prev.value != res.value => {
                            return Err(Error::IncompleteCertificate(format!(
                                "perturbed targets disagree: {} vs {}",
                                prev.value, res.value
                            )));
                        }
                        Some(_) => {}
                    }
                }
            }
            agreed.ok_or_else(|| {
                Error::IncompleteCertificate("no regular value found within retry budget".into())
            })
        }
    }
}

fn check_dims(g: &dyn VectorField, region: &Region, y: &DVector<f64>) -> Result<()> {
    if g.dim() != region.dim() {
        return Err(Error::Dimension {
            expected: region.dim(),
            got: g.dim(),
        });
    }
    if y.len() != region.dim() {
        return Err(Error::Dimension {
            expected: region.dim(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Uniform random point in the sup-norm ball of radius `radius` (strictly inside).
fn perturb(y: &DVector<f64>, radius: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_iterator(
        y.len(),
        y.iter().map(|v| v + radius * 0.999 * (2.0 * rng.gen::<f64>() - 1.0)),
    )
}

fn finish(mut cert: Vec<CertificatePoint>, perturbation: Option<Vec<f64>>) -> DegreeResult {
    cert.sort_by(|a, b| {
        a.x.iter()
            .zip(&b.x)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let value = cert.iter().map(|c| i64::from(c.sign)).sum();
    DegreeResult {
        value,
        method: DegreeMethod::RegularValueCount,
        certificate: cert,
        perturbation_used: perturbation,
    }
}

enum Attempt {
    Regular(Vec<CertificatePoint>),
    Singular,
}

fn count_preimages(
    g: &dyn VectorField,
    seed_box: &Region,
    inside: &(dyn Fn(&DVector<f64>) -> bool + Sync),
    y: &DVector<f64>,
    cfg: &DegreeConfig,
) -> Result<Attempt> {
    let seeds = seed_box.halton_points(cfg.seed_count(seed_box.dim()));
    let roots: Vec<Option<(DVector<f64>, f64)>> = seeds
        .par_iter()
        .map(|s| newton(g, s, y, seed_box, cfg))
        .collect();

    let dedup_tol = 1e-7 * seed_box.diameter();
    let mut found: Vec<(DVector<f64>, f64)> = Vec::new();
    for (x, res) in roots.into_iter().flatten() {
        if !inside(&x) {
            continue;
        }
        if found.iter().all(|(z, _)| (z - &x).amax() > dedup_tol) {
            found.push((x, res));
        }
    }

    let mut cert = Vec::with_capacity(found.len());
    for (x, residual) in found {
        let sign = jacobian_sign(g, &x)?;
        if sign == 0 || ill_conditioned(g, &x) {
            return Ok(Attempt::Singular);
        }
        cert.push(CertificatePoint {
            x: x.iter().copied().collect(),
            sign,
            residual,
        });
    }
    Ok(Attempt::Regular(cert))
}

/// A root this close to singular is not trusted to be isolated at the Newton tolerance.
fn ill_conditioned(g: &dyn VectorField, x: &DVector<f64>) -> bool {
    let sv = crate::linalg::singular_values(&g.jacobian(x));
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    min <= 1e-4 * max.max(1.0)
}

/// Damped Newton for `g(x) = y`; returns the root and its residual on success.
fn newton(
    g: &dyn VectorField,
    start: &DVector<f64>,
    y: &DVector<f64>,
    seed_box: &Region,
    cfg: &DegreeConfig,
) -> Option<(DVector<f64>, f64)> {
    let center = seed_box.center();
    let escape = 2.0 * seed_box.diameter();
    let mut x = start.clone();
    let mut r = g.eval(&x) - y;
    let mut nr = r.amax();
    for _ in 0..cfg.max_newton {
        if !nr.is_finite() {
            return None;
        }
        let jac = g.jacobian(&x);
        let step = jac.lu().solve(&(-&r))?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut t = 1.0;
        loop {
            let xn = &x + &step * t;
            let rn = g.eval(&xn) - y;
            let nrn = rn.amax();
            if nrn.is_finite() && nrn <= (1.0 - 1e-4 * t) * nr {
                x = xn;
                r = rn;
                nr = nrn;
                break;
            }
            t *= 0.5;
            if t < 1e-8 {
                return None;
            }
        }
        if (&x - &center).amax() > escape {
            return None;
        }
        if nr <= cfg.tol_root {
            // One extra full step to settle the root well below tolerance.
            if let Some(polish) = g.jacobian(&x).lu().solve(&(-&r)) {
                let xp = &x + polish;
                let rp = (g.eval(&xp) - y).amax();
                if rp <= nr {
                    return Some((xp, rp));
                }
            }
            return Some((x, nr));
        }
    }
    None
}
