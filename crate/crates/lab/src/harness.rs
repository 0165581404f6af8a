//! Convergence scans across `k`, diagonal fits and gap scans.
//!
//! Every `k` is processed independently (in parallel under rayon) and results
//! are collected in `k_list` order, so reports do not depend on the thread
//! count.

use bergman_core::fock::{monomial_gram_with_tol, GramBasis};
use bergman_core::form::form_rank;
use bergman_core::geometry::{classify_gap, curvature_at, signature, GapClassification, GapMode};
use bergman_core::laplacian::{
    assemble_laplacian, laplacian_spectrum, spectral_gap, OscillatorBasis, SpectralKernel,
};
use bergman_core::model::model_kernel_in_degree;
use bergman_core::numerics::SpectralData;
use bergman_core::{flat_volume_factor, Complex64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, GapModeName};
use crate::error::LabError;

pub type Result<T> = std::result::Result<T, LabError>;

pub const ORDER_ZERO_NOTE: &str =
    "convergence is measured at order 0 (sup of kernel values on the grid); derivative convergence is not reported";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// orthonormalized monomials
    Gram,
    /// thresholded Galerkin spectrum of the Laplacian
    Spectral,
}

/// Laplacian spectrum of the scaled operator at one `k`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub k: u64,
    pub basis: OscillatorBasis,
    pub data: SpectralData,
}

/// Scaled localized kernel at one `k`, factored as `K(z_i, z_j) = X_i X_j*`.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub k: u64,
    pub q: usize,
    pub points: Vec<Vec<Complex64>>,
    /// `forms × rank` per grid point
    pub values: Vec<DMatrix<Complex64>>,
}

impl KernelGrid {
    pub fn kernel(&self, i: usize, j: usize) -> DMatrix<Complex64> {
        &self.values[i] * self.values[j].adjoint()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPoint {
    pub k: u64,
    /// sup over grid pairs and entries of `|K_k − K_model|`
    pub distance: f64,
    /// scaled diagonal at the origin
    pub diagonal: f64,
    /// unscaled trivialized diagonal `B_k(0, 0) = k^n · diagonal`
    pub unscaled_diagonal: f64,
    /// retained Gram dimension or spectral rank
    pub dimension: usize,
    /// scaled threshold `c_k / k` (spectral pipeline)
    pub threshold: Option<f64>,
    pub nodes_outside: usize,
    pub underflow_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingFit {
    pub slope: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, pass: value <= limit }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignatureSummary {
    pub negatives: usize,
    pub positives: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n: usize,
    pub q: usize,
    pub q0: usize,
    pub pipeline: Pipeline,
    pub signature_at_origin: SignatureSummary,
    /// model diagonal `|λ₁⋯λ_n| / π^n` in degree `q0`, 0 otherwise
    pub model_diagonal: f64,
    pub points: Vec<KPoint>,
    pub fit: Option<LeadingFit>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub note: &'static str,
    pub pass: bool,
}

pub struct Convergence {
    pub report: ConvergenceReport,
    pub grids: Vec<KernelGrid>,
    pub spectra: Vec<Spectrum>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub k: u64,
    pub kernel_dim: usize,
    pub scaled_gap: f64,
    /// gap of the unscaled operator, `k · scaled_gap`
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub mode: String,
    pub k0: u64,
    /// `(k, gap, bound, pass)`
    pub checks: Vec<(u64, f64, f64, bool)>,
    pub pass: bool,
}

impl From<&GapClassification> for GapSummary {
    fn from(g: &GapClassification) -> Self {
        let mode = match g.mode {
            GapMode::Polynomial { d, c } => format!("polynomial(d={d}, c={c})"),
            GapMode::Exponential { rate, lambda_min, c } => format!("exponential(rate={rate}, lambda_min={lambda_min}, c={c})"),
        };
        GapSummary { mode, k0: g.k0, checks: g.checks.iter().map(|c| (c.k, c.gap, c.bound, c.pass)).collect(), pass: g.pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub q: usize,
    pub points: Vec<GapPoint>,
    pub polynomial: GapSummary,
    pub exponential: GapSummary,
    pub selected: GapModeName,
    pub pass: bool,
    pub note: &'static str,
}

pub const GAP_NOTE: &str =
    "polynomial and exponential classifications are reported side by side; at these k they are not distinguishable";

fn require_flat(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.metric.is_flat() {
        return Err(LabError::Unsupported("Laplacian assembly supports the flat metric only".into()));
    }
    Ok(())
}

/// Galerkin spectrum of `□_(k)` in degree `q`.
pub fn spectrum_at(cfg: &ExperimentConfig, q: usize, k: u64) -> Result<Spectrum> {
    require_flat(cfg)?;
    let basis = OscillatorBasis::for_weight(&cfg.weight, q, cfg.numerics.truncation)?;
    let op = assemble_laplacian(&basis, &cfg.weight, k as f64)?;
    Ok(Spectrum { k, basis, data: laplacian_spectrum(&op)? })
}

pub fn spectra(cfg: &ExperimentConfig, q: usize) -> Result<Vec<Spectrum>> {
    cfg.k_list.par_iter().map(|&k| spectrum_at(cfg, q, k)).collect()
}

pub fn gram_at(cfg: &ExperimentConfig, k: u64) -> Result<GramBasis> {
    let n = &cfg.numerics;
    Ok(monomial_gram_with_tol(&cfg.weight, &cfg.metric, k as f64, n.degree_cap, n.quad_order, n.pivot_tol)?)
}

struct Sampled {
    grid: KernelGrid,
    origin: DMatrix<Complex64>,
    dimension: usize,
    threshold: Option<f64>,
    nodes_outside: usize,
    underflow_nodes: usize,
}

fn unscale(z: &[Complex64], k: f64) -> Vec<Complex64> {
    z.iter().map(|c| c / k.sqrt()).collect()
}

/// `k^{-n/2} ψ_i(z/√k) e^{-kφ(z/√k)}`, one row.
fn gram_values(g: &GramBasis, k: f64, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let u = unscale(z, k);
    let s = (-g.weight().value(&u, k)?).exp() * k.powf(-(z.len() as f64) / 2.0);
    let v = g.orthonormal_values(&u)?;
    Ok(DMatrix::from_iterator(1, v.len(), v.into_iter().map(|x| x * s)))
}

fn spectral_values(sk: &SpectralKernel, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let s = flat_volume_factor(z.len()).sqrt().recip();
    Ok(sk.values_at(z)? * Complex64::new(s, 0.0))
}

/// Gram-pipeline kernel on the configured grid at one `k`.
pub fn gram_kernel_grid(cfg: &ExperimentConfig, k: u64) -> Result<(GramBasis, KernelGrid)> {
    let g = gram_at(cfg, k)?;
    let points = cfg.grid();
    let values = points.iter().map(|z| gram_values(&g, k as f64, z)).collect::<Result<Vec<_>>>()?;
    Ok((g, KernelGrid { k, q: 0, points, values }))
}

fn sample_gram(cfg: &ExperimentConfig, k: u64) -> Result<Sampled> {
    let (g, grid) = gram_kernel_grid(cfg, k)?;
    let origin = gram_values(&g, k as f64, &vec![Complex64::default(); cfg.dim()])?;
    Ok(Sampled {
        grid,
        origin,
        dimension: g.retained_dim(),
        threshold: None,
        nodes_outside: g.nodes_outside,
        underflow_nodes: g.underflow_nodes,
    })
}

fn sample_spectral(cfg: &ExperimentConfig, spec: &Spectrum, points: &[Vec<Complex64>]) -> Result<Sampled> {
    let c = cfg.threshold.scaled(spec.k as f64);
    let sk = SpectralKernel::new(&spec.data, &spec.basis, c)?;
    let values = points.iter().map(|z| spectral_values(&sk, z)).collect::<Result<Vec<_>>>()?;
    let origin = spectral_values(&sk, &vec![Complex64::default(); cfg.dim()])?;
    Ok(Sampled {
        grid: KernelGrid { k: spec.k, q: cfg.q, points: points.to_vec(), values },
        origin,
        dimension: sk.rank(),
        threshold: Some(c),
        nodes_outside: 0,
        underflow_nodes: 0,
    })
}

fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.norm()))
}

/// `sup_{i,j} |K(z_i, z_j) − K_model(z_i, z_j)|` entrywise.
pub fn grid_distance(cfg: &ExperimentConfig, grid: &KernelGrid) -> Result<f64> {
    let mut d = 0.0f64;
    for (i, z) in grid.points.iter().enumerate() {
        for (j, w) in grid.points.iter().enumerate() {
            let m = model_kernel_in_degree(&cfg.model, grid.q, z, w)?;
            d = d.max(max_abs(&(grid.kernel(i, j) - m.matrix)));
        }
    }
    Ok(d)
}

/// Diagonal entry reported at the origin: the model entry in degree `q0`,
/// otherwise the largest diagonal magnitude.
fn origin_diagonal(cfg: &ExperimentConfig, origin: &DMatrix<Complex64>) -> f64 {
    let k = origin * origin.adjoint();
    if cfg.q == cfg.model.q0() {
        let r = form_rank(cfg.model.negatives(), cfg.dim());
        k[(r, r)].re
    } else {
        (0..k.nrows()).fold(0.0, |m, i| m.max(k[(i, i)].norm()))
    }
}

/// Least-squares fit of `ln B_k = slope · ln k + ln coefficient`.
pub fn diagonal_leading_fit(ks: &[u64], values: &[f64]) -> Result<LeadingFit> {
    if ks.len() != values.len() || ks.len() < 3 {
        return Err(LabError::InvalidData(format!("fit needs at least 3 matching samples, got {} and {}", ks.len(), values.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(LabError::InvalidData(format!("diagonal values must be positive, got {v}")));
    }
    let x: Vec<f64> = ks.iter().map(|k| (*k as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InvalidData("fit needs at least two distinct k".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LeadingFit { slope, coefficient: (my - slope * mx).exp() })
}

fn signature_summary(cfg: &ExperimentConfig) -> Result<SignatureSummary> {
    let c = curvature_at(&cfg.weight, &cfg.metric, &vec![Complex64::default(); cfg.dim()])?;
    let s = signature(&c, None);
    Ok(SignatureSummary { negatives: s.negatives, positives: s.positives, degenerate: s.degenerate })
}

/// Scaled kernels on the grid for every `k`, compared with the model kernel
/// (or with 0 when `q` differs from the model degree).
pub fn convergence_scan(cfg: &ExperimentConfig) -> Result<Convergence> {
    let spectra = if cfg.uses_gram_path() { Vec::new() } else { spectra(cfg, cfg.q)? };
    convergence_with(cfg, spectra)
}

fn convergence_with(cfg: &ExperimentConfig, spectra: Vec<Spectrum>) -> Result<Convergence> {
    let points = cfg.grid();
    let pipeline = if cfg.uses_gram_path() { Pipeline::Gram } else { Pipeline::Spectral };
    let sampled: Vec<Sampled> = match pipeline {
        Pipeline::Gram => cfg.k_list.par_iter().map(|&k| sample_gram(cfg, k)).collect::<Result<_>>()?,
        Pipeline::Spectral => spectra.par_iter().map(|s| sample_spectral(cfg, s, &points)).collect::<Result<_>>()?,
    };
    let distances: Vec<f64> = sampled.par_iter().map(|s| grid_distance(cfg, &s.grid)).collect::<Result<_>>()?;
    let n = cfg.dim();
    let mut warnings = cfg.warnings.clone();
    let kpoints: Vec<KPoint> = sampled
        .iter()
        .zip(&distances)
        .map(|(s, &distance)| {
            let diagonal = origin_diagonal(cfg, &s.origin);
            KPoint {
                k: s.grid.k,
                distance,
                diagonal,
                unscaled_diagonal: diagonal * (s.grid.k as f64).powi(n as i32),
                dimension: s.dimension,
                threshold: s.threshold,
                nodes_outside: s.nodes_outside,
                underflow_nodes: s.underflow_nodes,
            }
        })
        .collect();
    for p in &kpoints {
        if p.nodes_outside > 0 {
            warnings.push(format!("k = {}: {} quadrature nodes beyond the validity radius were skipped", p.k, p.nodes_outside));
        }
        if p.underflow_nodes > 0 {
            warnings.push(format!("k = {}: weight factor underflows at {} quadrature nodes", p.k, p.underflow_nodes));
        }
    }
    let sig = signature_summary(cfg)?;
    if sig.degenerate {
        warnings.push("curvature is degenerate at the origin".into());
    }
    let in_degree = cfg.q == cfg.model.q0();
    let model_diagonal = if in_degree { cfg.model.diagonal_constant() } else { 0.0 };
    let fit = if in_degree && kpoints.len() >= 3 {
        let ks: Vec<u64> = kpoints.iter().map(|p| p.k).collect();
        let vs: Vec<f64> = kpoints.iter().map(|p| p.unscaled_diagonal).collect();
        diagonal_leading_fit(&ks, &vs).ok()
    } else {
        None
    };

    let cr = &cfg.criteria;
    let mut checks = Vec::new();
    if let Some(t) = cr.max_distance {
        checks.push(Check::at_most("max_distance", distances.iter().copied().fold(0.0, f64::max), t));
    }
    if let Some(t) = cr.final_distance {
        checks.push(Check::at_most("final_distance", *distances.last().expect("nonempty k_list"), t));
    }
    if cr.decreasing {
        let ok = distances.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check { name: "decreasing".into(), value: distances.len() as f64, limit: 0.0, pass: ok });
    }
    if let Some(t) = cr.diagonal_rel_tol {
        if in_degree {
            let d = kpoints.last().expect("nonempty k_list").diagonal;
            checks.push(Check::at_most("diagonal_rel", (d - model_diagonal).abs() / model_diagonal, t));
        } else {
            warnings.push("diagonal criterion skipped: q differs from the model degree".into());
        }
    }
    match (fit, cr.slope_tol, cr.coefficient_rel_tol) {
        (Some(f), s, c) => {
            if let Some(t) = s {
                checks.push(Check::at_most("slope", (f.slope - n as f64).abs(), t));
            }
            if let Some(t) = c {
                checks.push(Check::at_most("coefficient_rel", (f.coefficient - model_diagonal).abs() / model_diagonal, t));
            }
        }
        (None, None, None) => {}
        (None, _, _) => warnings.push("fit criteria skipped: need q = q0 and at least 3 values of k".into()),
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = ConvergenceReport {
        n,
        q: cfg.q,
        q0: cfg.model.q0(),
        pipeline,
        signature_at_origin: sig,
        model_diagonal,
        points: kpoints,
        fit,
        checks,
        warnings,
        note: ORDER_ZERO_NOTE,
        pass,
    };
    Ok(Convergence { report, grids: sampled.into_iter().map(|s| s.grid).collect(), spectra })
}

/// Unscaled gaps `k · (scaled gap)` and both gap classifications.
pub fn gap_scan(cfg: &ExperimentConfig) -> Result<(GapReport, Vec<Spectrum>)> {
    let spectra = spectra(cfg, cfg.q)?;
    Ok((gap_report(cfg, &spectra)?, spectra))
}

pub fn gap_report(cfg: &ExperimentConfig, spectra: &[Spectrum]) -> Result<GapReport> {
    let points: Vec<GapPoint> = spectra
        .iter()
        .map(|s| {
            let (kernel_dim, g) = spectral_gap(&s.data, cfg.numerics.zero_tol)?;
            Ok(GapPoint { k: s.k, kernel_dim, scaled_gap: g, gap: g * s.k as f64 })
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<(u64, f64)> = points.iter().map(|p| (p.k, p.gap)).collect();
    let lmin = cfg.weight.lambdas().iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
    let poly = classify_gap(&gaps, cfg.gap.polynomial(), cfg.gap.k0)?;
    let expo = classify_gap(&gaps, cfg.gap.exponential(lmin), cfg.gap.k0)?;
    let pass = match cfg.gap.mode {
        GapModeName::Polynomial => poly.pass,
        GapModeName::Exponential => expo.pass,
    };
    Ok(GapReport {
        q: cfg.q,
        points,
        polynomial: (&poly).into(),
        exponential: (&expo).into(),
        selected: cfg.gap.mode,
        pass,
        note: GAP_NOTE,
    })
}

/// Both pipelines at one `k` on the grid: `sup |K_gram − K_spectral|`.
pub fn cross_path_distance(cfg: &ExperimentConfig, k: u64) -> Result<f64> {
    if !cfg.uses_gram_path() {
        return Err(LabError::Unsupported("cross-path comparison needs q = 0 and positive eigenvalues".into()));
    }
    let points = cfg.grid();
    let a = sample_gram(cfg, k)?;
    let b = sample_spectral(cfg, &spectrum_at(cfg, 0, k)?, &points)?;
    let mut d = 0.0f64;
    for i in 0..points.len() {
        for j in 0..points.len() {
            d = d.max(max_abs(&(a.grid.kernel(i, j) - b.grid.kernel(i, j))));
        }
    }
    Ok(d)
}

/// Everything `run` reports.
pub struct Outcome {
    pub convergence: Convergence,
    pub gap: Option<GapReport>,
    pub pass: bool,
}

/// Convergence scan plus, for the flat metric, a gap scan sharing the spectra.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let flat = cfg.metric.is_flat();
    let spectra = if flat { spectra(cfg, cfg.q)? } else { Vec::new() };
    let gap = if flat { Some(gap_report(cfg, &spectra)?) } else { None };
    let mut convergence = if cfg.uses_gram_path() {
        let mut c = convergence_with(cfg, Vec::new())?;
        c.spectra = spectra;
        c
    } else {
        convergence_with(cfg, spectra)?
    };
    let r = &mut convergence.report;
    if cfg.criteria.gap {
        match &gap {
            Some(g) => r.checks.push(Check { name: "gap".into(), value: g.points.len() as f64, limit: 0.0, pass: g.pass }),
            None => r.warnings.push("gap criterion skipped: the Laplacian needs the flat metric".into()),
        }
    }
    if !flat {
        r.warnings.push("gap scan skipped for a non-flat metric".into());
    }
    r.pass = r.checks.iter().all(|c| c.pass);
    let pass = r.pass;
    Ok(Outcome { convergence, gap, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(src: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(src).unwrap()
    }

    #[test]
    fn fit_of_exact_power_law() {
        let ks = [4, 16, 64];
        let vs: Vec<f64> = ks.iter().map(|k| *k as f64 / std::f64::consts::PI).collect();
        let f = diagonal_leading_fit(&ks, &vs).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12 && (f.coefficient - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        let f = diagonal_leading_fit(&ks, &[2.0, 2.0, 2.0]).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(matches!(diagonal_leading_fit(&ks, &[1.0, 0.0, 1.0]), Err(LabError::InvalidData(_))));
        assert!(diagonal_leading_fit(&ks[..2], &vs[..2]).is_err());
    }

    #[test]
    fn gaussian_scan_is_exact() {
        let c = cfg("q = 0\nk_list = [1, 4, 16]\n[weight]\nlambdas = [1.0]\n[criteria]\nmax_distance = 1e-6\n");
        let r = convergence_scan(&c).unwrap().report;
        assert_eq!(r.pipeline, Pipeline::Gram);
        assert!(r.pass, "{:?}", r.points);
        let f = r.fit.unwrap();
        assert!((f.slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gap_scan_of_the_model() {
        let c = cfg("q = 0\nk_list = [1, 4]\n[weight]\nlambdas = [1.0]\n[numerics]\ntruncation = 10\n");
        let (g, _) = gap_scan(&c).unwrap();
        for p in &g.points {
            assert_eq!(p.kernel_dim, 10);
            assert!((p.gap - 2.0 * p.k as f64).abs() < 1e-8);
        }
        assert!(g.pass && g.polynomial.pass);
        let c = cfg("q = 1\nk_list = [4]\n[weight]\nlambdas = [1.0]\n[numerics]\ntruncation = 10\n");
        let (g, _) = gap_scan(&c).unwrap();
        assert_eq!(g.points[0].kernel_dim, 0);
        assert!((g.points[0].gap - 8.0).abs() < 1e-8);
    }

    #[test]
    fn synthetic_exponential_gaps_pass() {
        let gaps: Vec<(u64, f64)> = [4u64, 16, 64].iter().map(|&k| (k, 2.0 * (-(k as f64).sqrt()).exp())).collect();
        let c = classify_gap(&gaps, GapMode::Exponential { rate: 1.0, lambda_min: 1.0, c: 0.9 }, 1).unwrap();
        assert!(c.pass);
    }

    #[test]
    fn curved_metric_has_no_gap_scan() {
        let c = cfg("q = 0\nk_list = [4, 16]\n[weight]\nlambdas = [1.0]\n[metric]\nterms = [{ i = 1, j = 1, z = [1], zbar = [1], re = 0.1 }]\n[numerics]\ndegree_cap = 12\nquad_order = 40\n");
        let o = run_experiment(&c).unwrap();
        assert!(o.gap.is_none());
        assert!(o.convergence.report.warnings.iter().any(|w| w.contains("non-flat")));
        assert!(o.convergence.report.points.iter().all(|p| p.distance.is_finite()));
    }
}
