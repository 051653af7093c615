//! The four subcommands. Each returns an exit status: 0 on success, 1 when a check
//! or assertion fails.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Context;
use inclusion_degree::bvp::{self, ConstraintRegion};
use inclusion_degree::continuation::{
    self, degree_at, detect_bifurcation, sign_profile, BifurcationStatus, OrientedFamily,
    DEFAULT_WINDOW_SCAN, SIGN_SAMPLES,
};
use inclusion_degree::setvalued::SetValuedMap;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ProblemConfig;
use crate::output;

/// Minimum observed order of the image-residual study.
const MIN_IMAGE_ORDER: f64 = 1.9;
/// Samples used by `approx`.
const APPROX_SAMPLES: usize = 50;

struct Table {
    rows: Vec<(String, bool, String)>,
}

impl Table {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn push(&mut self, name: &str, ok: bool, detail: String) {
        self.rows.push((name.to_string(), ok, detail));
    }

    fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.1)
    }

    fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (name, ok, detail) in &self.rows {
            let status = if *ok { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{name:<width$}  {status}  {detail}");
        }
        s
    }
}

pub fn check(cfg: &ProblemConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let disc = cfg.discretization()?;
    let map = cfg.map(&disc)?;
    let mut table = Table::new();

    let kernel_residual = (disc.l() * disc.constant(1.0)).amax();
    let kernel_dim = disc.kernel_dim();
    table.push(
        "kernel",
        kernel_dim == 1 && kernel_residual <= 1e-12,
        format!("dim ker = {kernel_dim}, |L_h 1| = {kernel_residual:.3e}"),
    );

    let n = cfg.grid.n;
    let sizes = [n, 2 * n - 1, 4 * n - 3];
    let (residuals, order) = bvp::image_convergence(&sizes)?;
    table.push(
        "image residual",
        order >= MIN_IMAGE_ORDER,
        format!("order {order:.3} over n = {sizes:?}, finest residual {:.3e}", residuals[2]),
    );

    let b = cfg.half_width(&disc)?;
    let mut window = 0.0;
    let transversal = match bvp::transversality_check(&disc, DEFAULT_WINDOW_SCAN) {
        Ok(r) => {
            window = r.certified_b;
            let ok = r.transversal && r.certified_b >= b;
            table.push(
                "transversality",
                ok,
                format!("rank [L | C ker L] = {} of {}, window b >= {}", r.augmented_rank, r.n, r.certified_b),
            );
            ok
        }
        Err(e) => {
            table.push("transversality", false, e.to_string());
            false
        }
    };

    if transversal {
        let degree_cfg = cfg.degree_config();
        let family = OrientedFamily::from_disc(&disc, b)?;
        let profile = sign_profile(&family, b, SIGN_SAMPLES)?;
        table.push(
            "sign constancy",
            profile.constant_each_side(),
            format!("{SIGN_SAMPLES} samples per side of 0 in [-{b}, {b}]"),
        );
        let (plus, minus) = continuation::degree_jump_with(&disc, b, &degree_cfg)?;
        table.push(
            "degree jump",
            plus != minus,
            format!("deg(L + bC) = {plus:+}, deg(L - bC) = {minus:+}, b = {b}"),
        );
    }

    let [zp, zm] = map.zero_membership()?;
    table.push(
        "zero membership",
        !zp && !zm,
        format!("0 in phi(+1): {zp}, 0 in phi(-1): {zm}"),
    );

    write!(out, "{}", table.render())?;
    let yes = if transversal { "yes" } else { "no" };
    writeln!(out, "transversal: {yes}, dim ker = {kernel_dim}, window b >= {window}")?;
    Ok(if table.all_pass() { 0 } else { 1 })
}

pub fn degree(cfg: &ProblemConfig, lambda: f64, out: &mut dyn Write) -> anyhow::Result<i32> {
    let disc = cfg.discretization()?;
    let b = cfg.half_width(&disc)?;
    let (deg, sign) = degree_at(&disc, b, lambda, &cfg.degree_config())?;
    writeln!(out, "lambda = {lambda}")?;
    writeln!(out, "deg(L_h - lambda C_h, U, 0) = {deg}")?;
    writeln!(out, "sign(L_h - lambda C_h) = {sign}")?;
    if sign == 0 {
        writeln!(out, "operator is singular")?;
    }
    Ok(0)
}

pub fn trace(cfg: &ProblemConfig, out: &mut dyn Write) -> anyhow::Result<i32> {
    let disc = cfg.discretization()?;
    let map = cfg.map(&disc)?;
    let rect = cfg.rectangle(&disc)?;
    let tcfg = cfg.trace_config(&disc);
    let result = continuation::trace(&disc, &map, &rect, &tcfg)?;
    let bif = detect_bifurcation(&disc, &map, &cfg.trace.bifurcation_eps, &tcfg)?;
    let jump = continuation::degree_jump_with(&disc, rect.b, &cfg.degree_config())?;

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    std::fs::write(dir.join("gamma.csv"), output::gamma_csv(&result))?;
    std::fs::write(dir.join("sigma.csv"), output::sigma_csv(&result, disc.n()))?;
    let summary = output::summary(cfg, &result, &bif, jump);
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;

    for slice in &result.slices {
        if slice.nonempty {
            writeln!(out, "eps = {:+.6e}: {} witnesses", slice.eps, slice.samples.len())?;
        } else {
            writeln!(out, "eps = {:+.6e}: FAIL no witness in B_c(S0) x [-b, b]", slice.eps)?;
        }
    }
    match bif.status {
        BifurcationStatus::Detected => {
            writeln!(out, "bifurcation at u = {:+}, eps = 0, lambda = 0", bif.point.unwrap_or(0))?
        }
        BifurcationStatus::Inconclusive => writeln!(
            out,
            "bifurcation inconclusive: {}",
            bif.reason.as_deref().unwrap_or("")
        )?,
    }
    writeln!(out, "degree jump: ({:+}, {:+})", jump.0, jump.1)?;
    writeln!(out, "wrote {}", dir.display())?;
    Ok(if result.nonempty_all { 0 } else { 1 })
}

/// Graph-distance certification of sampled selections.
pub fn approx(cfg: &ProblemConfig, eps: f64, out: &mut dyn Write) -> anyhow::Result<i32> {
    let disc = cfg.discretization()?;
    let map = cfg.map(&disc)?;
    let (worst, count) = certify_selections(&disc, &map, eps, cfg.seed)?;
    writeln!(out, "{count} sampled selections, max graph distance {worst:.3e}, eps = {eps}")?;
    Ok(if worst <= eps { 0 } else { 1 })
}

fn certify_selections(
    disc: &bvp::Discretization,
    map: &SetValuedMap,
    eps: f64,
    seed: u64,
) -> anyhow::Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region = ConstraintRegion::new(disc);
    let mut worst: f64 = 0.0;
    for k in 0..APPROX_SAMPLES {
        let base = &region.trivial_solutions()[k % 2];
        let u = base + DVector::from_fn(disc.n(), |_, _| rng.gen_range(-0.5..0.5));
        let s: f64 = rng.gen_range(0.0..=1.0);
        let w = map.make_selection(&u, s)?;
        worst = worst.max(map.graph_distance(&u, &w, eps)?);
    }
    Ok((worst, APPROX_SAMPLES))
}
