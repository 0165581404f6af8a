//! CSV, JSON and plain-text outputs.
//!
//! Floats are written in shortest round-trip form so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bergman_core::form::form_indices;
use bergman_core::model::{model_kernel_in_degree, ModelSpec};
use bergman_core::{Complex64, FormIndex, KernelValue};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::harness::{ConvergenceReport, GapReport, KernelGrid, Outcome, Spectrum};

type Result<T> = std::result::Result<T, LabError>;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
    move |e| LabError::Io { path: path.to_path_buf(), source: e }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> LabError + '_ {
    move |e| LabError::Io { path: path.to_path_buf(), source: e.into() }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io(dir))
}

fn index_label(i: &FormIndex) -> String {
    if i.degree() == 0 {
        "-".into()
    } else {
        i.one_based().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(":")
    }
}

fn header(n: usize) -> Vec<String> {
    let mut h = Vec::new();
    for p in ["z", "w"] {
        for i in 1..=n {
            h.push(format!("re_{p}{i}"));
            h.push(format!("im_{p}{i}"));
        }
    }
    h.extend(["I", "J", "re", "im"].map(String::from));
    h
}

fn coords(z: &[Complex64]) -> impl Iterator<Item = String> + '_ {
    z.iter().flat_map(|c| [c.re.to_string(), c.im.to_string()])
}

fn write_pairs(
    path: &Path,
    n: usize,
    q: usize,
    points: &[Vec<Complex64>],
    mut kernel: impl FnMut(usize, usize) -> Result<KernelValue>,
) -> Result<()> {
    let forms = form_indices(n, q)?;
    let labels: Vec<String> = forms.iter().map(index_label).collect();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header(n)).map_err(csv_err(path))?;
    for (i, z) in points.iter().enumerate() {
        for (j, p) in points.iter().enumerate() {
            let kv = kernel(i, j)?;
            for (a, la) in labels.iter().enumerate() {
                for (b, lb) in labels.iter().enumerate() {
                    let v = kv.matrix[(a, b)];
                    let mut rec: Vec<String> = coords(z).chain(coords(p)).collect();
                    rec.extend([la.clone(), lb.clone(), v.re.to_string(), v.im.to_string()]);
                    w.write_record(&rec).map_err(csv_err(path))?;
                }
            }
        }
    }
    w.flush().map_err(io(path))
}

/// Kernel on all grid pairs, columns `re_z…, im_z…, re_w…, im_w…, I, J, re, im`.
pub fn write_kernel_grid(path: &Path, n: usize, grid: &KernelGrid) -> Result<()> {
    write_pairs(path, n, grid.q, &grid.points, |i, j| Ok(KernelValue { n, q: grid.q, matrix: grid.kernel(i, j) }))
}

pub fn write_model_grid(path: &Path, spec: &ModelSpec, q: usize, points: &[Vec<Complex64>]) -> Result<()> {
    write_pairs(path, spec.dim(), q, points, |i, j| Ok(model_kernel_in_degree(spec, q, &points[i], &points[j])?))
}

/// Columns `k, q, index, eigenvalue, unscaled`; `eigenvalue` belongs to the scaled operator.
pub fn write_spectra(path: &Path, q: usize, spectra: &[Spectrum]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["k", "q", "index", "eigenvalue", "unscaled"]).map_err(csv_err(path))?;
    for s in spectra {
        for (i, e) in s.data.eigenvalues.iter().enumerate() {
            let rec = [s.k.to_string(), q.to_string(), i.to_string(), e.to_string(), (e * s.k as f64).to_string()];
            w.write_record(&rec).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io(path))
}

pub fn write_gaps(path: &Path, g: &GapReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["k", "kernel_dim", "scaled_gap", "gap"]).map_err(csv_err(path))?;
    for p in &g.points {
        w.write_record([p.k.to_string(), p.kernel_dim.to_string(), p.scaled_gap.to_string(), p.gap.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| LabError::InvalidData(e.to_string()))?;
    fs::write(path, s + "\n").map_err(io(path))
}

#[derive(Serialize)]
pub struct ConfigEcho<'a> {
    pub lambdas: &'a [f64],
    pub q: usize,
    pub k_list: &'a [u64],
    pub grid_radius: f64,
    pub grid_points: usize,
    pub flat_metric: bool,
    pub threshold: crate::config::ThresholdRule,
    pub numerics: crate::config::Numerics,
}

impl<'a> ConfigEcho<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        ConfigEcho {
            lambdas: cfg.weight.lambdas(),
            q: cfg.q,
            k_list: &cfg.k_list,
            grid_radius: cfg.grid_radius,
            grid_points: cfg.grid_points,
            flat_metric: cfg.metric.is_flat(),
            threshold: cfg.threshold,
            numerics: cfg.numerics,
        }
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: ConfigEcho<'a>,
    convergence: &'a ConvergenceReport,
    gap: Option<&'a GapReport>,
    pass: bool,
}

pub fn summary_text(cfg: &ExperimentConfig, conv: &ConvergenceReport, gap: Option<&GapReport>, pass: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lambdas {:?}  n = {}  q = {}  q0 = {}  pipeline {:?}", cfg.weight.lambdas(), conv.n, conv.q, conv.q0, conv.pipeline);
    let sig = conv.signature_at_origin;
    let _ = writeln!(s, "curvature at 0: {} negative, {} positive{}", sig.negatives, sig.positives, if sig.degenerate { ", degenerate" } else { "" });
    let _ = writeln!(s, "model diagonal {:.6e}", conv.model_diagonal);
    let _ = writeln!(s, "{:>6} {:>12} {:>12} {:>12} {:>6}", "k", "d_k", "diag(0)", "B_k(0,0)", "dim");
    for p in &conv.points {
        let _ = writeln!(s, "{:>6} {:>12.4e} {:>12.6} {:>12.4e} {:>6}", p.k, p.distance, p.diagonal, p.unscaled_diagonal, p.dimension);
    }
    if let Some(f) = conv.fit {
        let _ = writeln!(s, "fit: slope {:.4}  coefficient {:.6}", f.slope, f.coefficient);
    }
    if let Some(g) = gap {
        let _ = writeln!(s, "gaps (unscaled):");
        for p in &g.points {
            let _ = writeln!(s, "{:>6} kernel {:>4}  gap {:.6e}", p.k, p.kernel_dim, p.gap);
        }
        let _ = writeln!(s, "{}: {}", g.polynomial.mode, if g.polynomial.pass { "pass" } else { "fail" });
        let _ = writeln!(s, "{}: {}", g.exponential.mode, if g.exponential.pass { "pass" } else { "fail" });
    }
    for c in &conv.checks {
        let _ = writeln!(s, "{} {}: {:.4e} (limit {:.4e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    for w in &conv.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s, "note: {}", conv.note);
    let _ = writeln!(s, "{}", if pass { "overall: PASS" } else { "overall: FAIL" });
    s
}

/// Writes `report.json`, `summary.txt`, kernel grids and spectra into `dir`.
pub fn write_outcome(dir: &Path, cfg: &ExperimentConfig, o: &Outcome) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let n = cfg.dim();
    let conv = &o.convergence;
    for g in &conv.grids {
        let p = dir.join(format!("kernel_k{}.csv", g.k));
        write_kernel_grid(&p, n, g)?;
        written.push(p);
    }
    let p = dir.join("model_kernel.csv");
    write_model_grid(&p, &cfg.model, cfg.q, &cfg.grid())?;
    written.push(p);
    if !conv.spectra.is_empty() {
        let p = dir.join("spectrum.csv");
        write_spectra(&p, cfg.q, &conv.spectra)?;
        written.push(p);
    }
    if let Some(g) = &o.gap {
        let p = dir.join("gaps.csv");
        write_gaps(&p, g)?;
        written.push(p);
    }
    let p = dir.join("report.json");
    write_json(&p, &RunReport { config: ConfigEcho::new(cfg), convergence: &conv.report, gap: o.gap.as_ref(), pass: o.pass })?;
    written.push(p);
    let p = dir.join("summary.txt");
    fs::write(&p, summary_text(cfg, &conv.report, o.gap.as_ref(), o.pass)).map_err(io(&p))?;
    written.push(p);
    Ok(written)
}
