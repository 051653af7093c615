//! CSV and JSON serialization of trace results.

use std::fmt::Write as _;

use inclusion_degree::continuation::{BifurcationReport, BranchHull, ExcessRow, PersistenceResult};
use serde::Serialize;

use crate::config::ProblemConfig;

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Row<'a> {
    eps: f64,
    s: f64,
    lambda: f64,
    sample: &'a inclusion_degree::continuation::GammaSample,
}

fn sorted_rows(result: &PersistenceResult) -> Vec<Row<'_>> {
    let mut rows: Vec<Row<'_>> = result
        .slices
        .iter()
        .flat_map(|sl| sl.samples.iter())
        .map(|p| Row {
            eps: p.eps,
            s: p.s,
            lambda: p.lambda,
            sample: p,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.eps
            .total_cmp(&b.eps)
            .then(a.s.total_cmp(&b.s))
            .then(a.lambda.total_cmp(&b.lambda))
    });
    rows
}

pub fn gamma_csv(result: &PersistenceResult) -> String {
    let mut s = String::from("eps,s,lambda,residual,u_dist_to_S0,converged\n");
    for r in sorted_rows(result) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(r.eps),
            num(r.s),
            num(r.lambda),
            num(r.sample.residual),
            num(r.sample.u_dist_to_s0),
            r.sample.converged
        );
    }
    s
}

pub fn sigma_csv(result: &PersistenceResult, n: usize) -> String {
    let mut s = String::from("eps,s,lambda");
    for i in 0..n {
        let _ = write!(s, ",u{i}");
    }
    s.push('\n');
    for r in sorted_rows(result) {
        let _ = write!(s, "{},{},{}", num(r.eps), num(r.s), num(r.lambda));
        for v in &r.sample.u {
            let _ = write!(s, ",{}", num(*v));
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
pub struct SliceSummary {
    pub eps: f64,
    pub nonempty: bool,
    pub witnesses: usize,
    pub hulls: Vec<BranchHull>,
    pub missing_s: Vec<f64>,
    pub branch_switches: usize,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub family: &'static str,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub certified_b: f64,
    pub c: f64,
    pub s_grid: Vec<f64>,
    pub nonempty_all: bool,
    pub nonemptiness: Vec<SliceSummary>,
    pub usc_excess: Vec<ExcessRow>,
    pub sigma_excess: Vec<ExcessRow>,
    pub usc_within_bound: bool,
    /// `+1` or `-1` when detected.
    pub detected_bifurcation: Option<i8>,
    pub bifurcation: BifurcationReport,
    /// `(deg(L + bC), deg(L - bC))`.
    pub degree_jump: [i64; 2],
}

pub fn summary(
    cfg: &ProblemConfig,
    result: &PersistenceResult,
    bif: &BifurcationReport,
    jump: (i64, i64),
) -> Summary {
    Summary {
        seed: cfg.seed,
        family: cfg.family.name(),
        n: cfg.grid.n,
        a: result.rect.a,
        b: result.rect.b,
        certified_b: result.rect.certified_b,
        c: result.c_neighborhood,
        s_grid: result.s_grid.clone(),
        nonempty_all: result.nonempty_all,
        nonemptiness: result
            .slices
            .iter()
            .map(|s| SliceSummary {
                eps: s.eps,
                nonempty: s.nonempty,
                witnesses: s.samples.len(),
                hulls: s.hulls.clone(),
                missing_s: s.missing_s.clone(),
                branch_switches: s.branch_switches,
            })
            .collect(),
        usc_excess: result.gamma_excess.clone(),
        sigma_excess: result.sigma_excess.clone(),
        usc_within_bound: result.usc_within_bound(),
        detected_bifurcation: bif.point,
        bifurcation: bif.clone(),
        degree_jump: [jump.0, jump.1],
    }
}
