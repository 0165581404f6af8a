//! Experiment configuration, read from TOML.
//!
//! ```toml
//! q = 0
//! k_list = [4, 16, 64]
//!
//! [weight]
//! lambdas = [1.0]
//! terms = [{ z = [2], zbar = [2], coeff = 0.05 }]   # 0.05·Re(z² z̄²)
//! # radius = 2.0
//!
//! [metric]                                          # omit for the flat metric
//! terms = [{ i = 1, j = 1, z = [1], zbar = [1], re = 0.1, im = 0.0 }]
//!
//! [grid]
//! radius = 1.5
//! points = 9
//!
//! [threshold]
//! rule = "sqrt"                                     # zero | sqrt | constant | power
//!
//! [numerics]
//! degree_cap = 20
//! truncation = 24
//! quad_order = 64
//!
//! [criteria]
//! final_distance = 1e-3
//! decreasing = true
//!
//! [gap]
//! mode = "polynomial"
//! d = 0.0
//! c = 1.0
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use bergman_core::fock::{DEFAULT_DEGREE_CAP, DEFAULT_QUAD_ORDER};
use bergman_core::geometry::{GapMode, MetricModel, WeightModel};
use bergman_core::laplacian::DEFAULT_TRUNCATION;
use bergman_core::model::ModelSpec;
use bergman_core::numerics::DEFAULT_PIVOT_TOL;
use bergman_core::poly::{Monomial, ZPoly};
use bergman_core::Complex64;
use serde::Deserialize;
use toml::Spanned;

use crate::error::LabError;

pub const DEFAULT_GRID_RADIUS: f64 = 1.5;
/// Points per real axis before the ball filter.
pub const DEFAULT_GRID_POINTS: [usize; 2] = [9, 5];
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    q: Spanned<usize>,
    k_list: Spanned<Vec<i64>>,
    weight: RawWeight,
    #[serde(default)]
    metric: RawMetric,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    threshold: ThresholdRule,
    #[serde(default)]
    numerics: RawNumerics,
    #[serde(default)]
    criteria: Criteria,
    #[serde(default)]
    gap: GapConfig,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeight {
    lambdas: Spanned<Vec<f64>>,
    #[serde(default)]
    terms: Vec<Spanned<WeightTerm>>,
    radius: Option<Spanned<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightTerm {
    z: Vec<u32>,
    zbar: Vec<u32>,
    coeff: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    #[serde(default)]
    terms: Vec<Spanned<MetricTerm>>,
    radius: Option<Spanned<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricTerm {
    i: usize,
    j: usize,
    z: Vec<u32>,
    zbar: Vec<u32>,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    radius: Option<Spanned<f64>>,
    points: Option<Spanned<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    degree_cap: Option<u32>,
    truncation: Option<Spanned<usize>>,
    quad_order: Option<Spanned<usize>>,
    pivot_tol: Option<f64>,
    zero_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// Unscaled threshold `c_k`; the scaled operator is cut at `c_k / k`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default, serde::Serialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum ThresholdRule {
    /// Bergman projection
    Zero,
    #[default]
    Sqrt,
    Constant { value: f64 },
    /// `c_k = k^{-d}`
    Power { d: f64 },
}

impl ThresholdRule {
    pub fn unscaled(&self, k: f64) -> f64 {
        match *self {
            ThresholdRule::Zero => 0.0,
            ThresholdRule::Sqrt => k.sqrt(),
            ThresholdRule::Constant { value } => value,
            ThresholdRule::Power { d } => k.powf(-d),
        }
    }

    pub fn scaled(&self, k: f64) -> f64 {
        self.unscaled(k) / k
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct Criteria {
    /// `d_k` bound for every `k`
    pub max_distance: Option<f64>,
    /// `d_k` bound at the largest `k`
    pub final_distance: Option<f64>,
    #[serde(default)]
    pub decreasing: bool,
    /// scaled diagonal at the origin against the model value, largest `k`
    pub diagonal_rel_tol: Option<f64>,
    pub slope_tol: Option<f64>,
    pub coefficient_rel_tol: Option<f64>,
    #[serde(default)]
    pub gap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GapModeName {
    #[default]
    Polynomial,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapConfig {
    pub mode: GapModeName,
    pub d: f64,
    pub c: f64,
    pub rate: f64,
    pub k0: u64,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig { mode: GapModeName::Polynomial, d: 0.0, c: 1.0, rate: 1.0, k0: 1 }
    }
}

impl GapConfig {
    pub fn polynomial(&self) -> GapMode {
        GapMode::Polynomial { d: self.d, c: self.c }
    }

    pub fn exponential(&self, lambda_min: f64) -> GapMode {
        GapMode::Exponential { rate: self.rate, lambda_min, c: self.c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Numerics {
    pub degree_cap: u32,
    pub truncation: usize,
    pub quad_order: usize,
    pub pivot_tol: f64,
    pub zero_tol: f64,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub q: usize,
    pub k_list: Vec<u64>,
    pub weight: WeightModel,
    pub metric: MetricModel,
    pub model: ModelSpec,
    pub grid_radius: f64,
    pub grid_points: usize,
    pub threshold: ThresholdRule,
    pub numerics: Numerics,
    pub criteria: Criteria,
    pub gap: GapConfig,
    pub output_dir: Option<PathBuf>,
    pub warnings: Vec<String>,
}

/// 1-based line and column of a byte offset.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

struct Ctx<'a> {
    src: &'a str,
    path: &'a Path,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, msg: impl Into<String>) -> LabError {
        let (line, column) = line_col(self.src, span.start);
        LabError::Config { path: self.path.to_path_buf(), line, column, message: msg.into() }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, LabError> {
        let src = std::fs::read_to_string(path).map_err(|e| LabError::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&src, path)
    }

    pub fn from_toml_str(src: &str) -> Result<Self, LabError> {
        Self::parse(src, Path::new("<inline>"))
    }

    fn parse(src: &str, path: &Path) -> Result<Self, LabError> {
        let cx = Ctx { src, path };
        let raw: RawConfig = toml::from_str(src).map_err(|e| {
            let span = e.span().unwrap_or(0..0);
            cx.err(span, e.message().to_string())
        })?;
        let mut warnings = Vec::new();

        let lambdas = raw.weight.lambdas.get_ref();
        let lspan = raw.weight.lambdas.span();
        let n = lambdas.len();
        if n == 0 || n > 2 {
            return Err(cx.err(lspan, format!("dimension must be 1 or 2, got {n}")));
        }
        let model = ModelSpec::new(lambdas).map_err(|e| cx.err(lspan.clone(), e.to_string()))?;

        let mut terms = Vec::new();
        for t in &raw.weight.terms {
            let m = Monomial::new(t.get_ref().z.clone(), t.get_ref().zbar.clone()).map_err(|e| cx.err(t.span(), e.to_string()))?;
            if m.dim() != n {
                return Err(cx.err(t.span(), format!("monomial has {} coordinates, weight has {n}", m.dim())));
            }
            terms.push((m, t.get_ref().coeff));
        }
        let pert = ZPoly::real_from_terms(n, terms).map_err(|e| cx.err(lspan.clone(), e.to_string()))?;
        let wspan = raw.weight.radius.as_ref().map_or(lspan.clone(), |r| r.span());
        let weight = WeightModel::new(lambdas, pert, raw.weight.radius.as_ref().map(|r| *r.get_ref()))
            .map_err(|e| cx.err(wspan.clone(), e.to_string()))?;
        if let Err(e) = weight.check_normal_form() {
            warnings.push(e.to_string());
        }

        let mut mterms = Vec::new();
        for t in &raw.metric.terms {
            let v = t.get_ref();
            if v.i == 0 || v.j == 0 || v.i > n || v.j > n {
                return Err(cx.err(t.span(), format!("metric entry ({}, {}) outside 1..={n}", v.i, v.j)));
            }
            let m = Monomial::new(v.z.clone(), v.zbar.clone()).map_err(|e| cx.err(t.span(), e.to_string()))?;
            if m.dim() != n {
                return Err(cx.err(t.span(), format!("monomial has {} coordinates, metric has {n}", m.dim())));
            }
            mterms.push((v.i - 1, v.j - 1, m, Complex64::new(v.re, v.im)));
        }
        let mspan = raw.metric.radius.as_ref().map(|r| r.span()).or_else(|| raw.metric.terms.first().map(|t| t.span()));
        let metric = MetricModel::from_terms(n, mterms, raw.metric.radius.as_ref().map(|r| *r.get_ref()))
            .map_err(|e| cx.err(mspan.clone().unwrap_or(0..0), e.to_string()))?;

        let q = *raw.q.get_ref();
        if q > n {
            return Err(cx.err(raw.q.span(), format!("form degree {q} exceeds dimension {n}")));
        }

        let kspan = raw.k_list.span();
        let ks = raw.k_list.get_ref();
        if ks.is_empty() {
            return Err(cx.err(kspan, "k_list must not be empty"));
        }
        if ks.iter().any(|k| *k <= 0) {
            return Err(cx.err(kspan, "k_list entries must be positive integers"));
        }
        if ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(cx.err(kspan, "k_list must be strictly increasing"));
        }
        let k_list: Vec<u64> = ks.iter().map(|k| *k as u64).collect();

        let grid_radius = raw.grid.radius.as_ref().map_or(DEFAULT_GRID_RADIUS, |r| *r.get_ref());
        let grid_span = raw.grid.radius.as_ref().map_or(0..0, |r| r.span());
        if !(grid_radius > 0.0) || !grid_radius.is_finite() {
            return Err(cx.err(grid_span, "grid radius must be positive and finite"));
        }
        // scaled grid point z sits at z/√k in unscaled coordinates
        let validity = weight.radius().min(metric.radius());
        let kmin = k_list[0] as f64;
        if grid_radius > validity * kmin.sqrt() {
            return Err(cx.err(
                grid_span,
                format!("grid radius {grid_radius} exceeds validity radius {validity} times sqrt(k_min) = {}", validity * kmin.sqrt()),
            ));
        }
        let grid_points = raw.grid.points.as_ref().map_or(DEFAULT_GRID_POINTS[n - 1], |p| *p.get_ref());
        if grid_points == 0 {
            return Err(cx.err(raw.grid.points.as_ref().unwrap().span(), "grid needs at least one point per axis"));
        }

        let num = &raw.numerics;
        let truncation = num.truncation.as_ref().map_or(DEFAULT_TRUNCATION[n - 1], |t| *t.get_ref());
        if truncation == 0 {
            return Err(cx.err(num.truncation.as_ref().unwrap().span(), "truncation must be at least 1"));
        }
        let quad_order = num.quad_order.as_ref().map_or(DEFAULT_QUAD_ORDER[n - 1], |t| *t.get_ref());
        if quad_order == 0 {
            return Err(cx.err(num.quad_order.as_ref().unwrap().span(), "quadrature order must be at least 1"));
        }
        let numerics = Numerics {
            degree_cap: num.degree_cap.unwrap_or(DEFAULT_DEGREE_CAP[n - 1]),
            truncation,
            quad_order,
            pivot_tol: num.pivot_tol.unwrap_or(DEFAULT_PIVOT_TOL),
            zero_tol: num.zero_tol.unwrap_or(DEFAULT_ZERO_TOL),
        };

        match raw.threshold {
            ThresholdRule::Power { d } if d <= -1.0 => {
                warnings.push(format!("threshold k^-({d}) does not satisfy c_k/k -> 0"));
            }
            ThresholdRule::Constant { value } if value < 0.0 => {
                return Err(cx.err(0..0, "constant threshold must be nonnegative"));
            }
            _ => {}
        }
        let lmin = lambdas.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
        if let Some(k) = k_list.iter().find(|k| raw.threshold.scaled(**k as f64) >= 2.0 * lmin) {
            warnings.push(format!("scaled threshold at k = {k} reaches the first excited model level {}", 2.0 * lmin));
        }
        if !(raw.gap.c > 0.0) {
            return Err(cx.err(0..0, "gap constant c must be positive"));
        }

        Ok(ExperimentConfig {
            q,
            k_list,
            weight,
            metric,
            model,
            grid_radius,
            grid_points,
            threshold: raw.threshold,
            numerics,
            criteria: raw.criteria,
            gap: raw.gap,
            output_dir: raw.output.dir,
            warnings,
        })
    }

    pub fn dim(&self) -> usize {
        self.weight.dim()
    }

    /// Whether the degree-`q` Bergman projection is computed by the Gram pipeline.
    pub fn uses_gram_path(&self) -> bool {
        self.q == 0 && self.weight.lambdas().iter().all(|l| *l > 0.0)
    }

    pub fn grid(&self) -> Vec<Vec<Complex64>> {
        bergman_core::fock::ball_grid(self.dim(), self.grid_radius, self.grid_points)
    }
}
