//! Problem configuration, read from a TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use inclusion_degree::bvp::{self, Discretization, OperatorKind, TOL_CONSTRAINT};
use inclusion_degree::continuation::{self, ParamRectangle, TraceConfig, TraceMode};
use inclusion_degree::degree::DegreeConfig;
use inclusion_degree::setvalued::{Family, SetValuedMap};
use inclusion_degree::solver::SolverConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Seed for degree perturbations and sampled certifications.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "Family::default_nonlocal")]
    pub family: Family,
    #[serde(default)]
    pub rectangle: RectangleConfig,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    20_240_917
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            grid: GridConfig::default(),
            family: Family::default_nonlocal(),
            rectangle: RectangleConfig::default(),
            trace: TraceSection::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub operator: OperatorKind,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 32,
            operator: OperatorKind::Standard,
        }
    }
}

/// `lambda` half-width: a number, or `"auto"` for half the certified window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HalfWidth {
    Value(f64),
    Keyword(Auto),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RectangleConfig {
    pub a: f64,
    pub b: HalfWidth,
    /// Number of equispaced `eps` samples in `[-a, a]`; ignored when `eps_grid` is set.
    pub eps_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
}

impl Default for RectangleConfig {
    fn default() -> Self {
        Self {
            a: 0.05,
            b: HalfWidth::Keyword(Auto::Auto),
            eps_count: 9,
            eps_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub c: f64,
    pub s_count: usize,
    pub usc_slope: f64,
    pub mode: TraceMode,
    pub bifurcation_eps: Vec<f64>,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            c: 0.25,
            s_count: 3,
            usc_slope: 4.0,
            mode: TraceMode::Pipelined,
            bifurcation_eps: vec![0.04, 0.02, 0.01, 0.005, 0.0025],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Newton tolerance; derived from `||L_h||` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_newton: Option<f64>,
    pub tol_constraint: f64,
    pub max_iters: usize,
    pub tol_boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_newton: None,
            tol_constraint: TOL_CONSTRAINT,
            max_iters: 50,
            tol_boundary: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl ProblemConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text).context("malformed configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.grid.n < bvp::MIN_GRID {
            bail!("grid.n = {} is below {}", self.grid.n, bvp::MIN_GRID);
        }
        self.family.validate()?;
        let r = &self.rectangle;
        if !(r.a >= 0.0 && r.a.is_finite()) {
            bail!("rectangle.a must be finite and >= 0");
        }
        if let HalfWidth::Value(b) = r.b {
            if !(b > 0.0 && b.is_finite()) {
                bail!("rectangle.b must be positive");
            }
        }
        if let Some(grid) = &r.eps_grid {
            if grid.is_empty() || grid.iter().any(|e| !e.is_finite()) {
                bail!("rectangle.eps_grid must be a nonempty list of finite numbers");
            }
        }
        let t = &self.trace;
        if !(t.c > 0.0 && t.c < 1.0) {
            bail!("trace.c must lie in (0, 1)");
        }
        if t.s_count == 0 {
            bail!("trace.s_count must be positive");
        }
        if !(t.usc_slope >= 0.0) {
            bail!("trace.usc_slope must be >= 0");
        }
        let tol = &self.tolerances;
        if tol.tol_newton.is_some_and(|v| !(v > 0.0)) || !(tol.tol_constraint > 0.0) || !(tol.tol_boundary > 0.0) {
            bail!("tolerances must be positive");
        }
        if tol.max_iters == 0 {
            bail!("tolerances.max_iters must be positive");
        }
        Ok(())
    }

    pub fn discretization(&self) -> anyhow::Result<Discretization> {
        Ok(bvp::build_with(self.grid.n, self.grid.operator)?)
    }

    pub fn map(&self, disc: &Discretization) -> anyhow::Result<SetValuedMap> {
        Ok(SetValuedMap::new(self.family.clone(), disc)?)
    }

    /// The configured `b`, resolving `"auto"` against the certified window.
    pub fn half_width(&self, disc: &Discretization) -> anyhow::Result<f64> {
        Ok(match self.rectangle.b {
            HalfWidth::Value(b) => b,
            HalfWidth::Keyword(Auto::Auto) => {
                let report = bvp::transversality_check(disc, continuation::DEFAULT_WINDOW_SCAN)?;
                report.certified_b / 2.0
            }
        })
    }

    pub fn rectangle(&self, disc: &Discretization) -> anyhow::Result<ParamRectangle> {
        let b = self.half_width(disc)?;
        let r = &self.rectangle;
        Ok(match &r.eps_grid {
            Some(grid) => ParamRectangle::with_grid(disc, r.a, b, grid.clone())?,
            None => ParamRectangle::new(disc, r.a, b, r.eps_count)?,
        })
    }

    pub fn solver(&self, disc: &Discretization) -> SolverConfig {
        let mut cfg = SolverConfig::for_disc(disc);
        if let Some(tol) = self.tolerances.tol_newton {
            cfg.tol_newton = tol;
        }
        cfg.tol_constraint = self.tolerances.tol_constraint;
        cfg.max_iters = self.tolerances.max_iters;
        cfg
    }

    pub fn trace_config(&self, disc: &Discretization) -> TraceConfig {
        TraceConfig {
            c: self.trace.c,
            s_grid: continuation::s_grid(self.trace.s_count),
            usc_slope: self.trace.usc_slope,
            mode: self.trace.mode,
            solver: self.solver(disc),
        }
    }

    pub fn degree_config(&self) -> DegreeConfig {
        DegreeConfig {
            tol_boundary: self.tolerances.tol_boundary,
            seed: self.seed,
            ..DegreeConfig::default()
        }
    }
}
