//! Weights `φ = Σ λ_i |z_i|² + p(z, z̄)`, Hermitian metrics `h = I + P(z)`,
//! curvature signatures and spectral-gap classification.
//!
//! The curvature operator carries the factor 2 of `Θ = 2 Σ φ_{i j̄} dz^i ∧ dz̄^j`:
//! at the origin of a flat model its eigenvalues are `2 λ_i`, while the model
//! kernels are written in terms of `λ_i` themselves.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::numerics::hermitian_eigh;
use crate::poly::{Monomial, ZPoly};
use crate::{c64, C64};

fn norm(z: &[C64]) -> f64 {
    libm::sqrt(z.iter().map(|c| c.norm_sqr()).sum())
}

/// Value and derivatives up to order two of `k φ` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightJet {
    pub value: f64,
    /// `∂(kφ)/∂z_i`
    pub dz: Vec<C64>,
    /// `∂(kφ)/∂z̄_i`
    pub dzbar: Vec<C64>,
    /// `∂²(kφ)/∂z_i∂z̄_j` at `(i, j)`
    pub hessian: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightModel {
    lambdas: Vec<f64>,
    perturbation: ZPoly,
    d_z: Vec<ZPoly>,
    d_zbar: Vec<ZPoly>,
    hess: Vec<ZPoly>,
    radius: f64,
}

impl WeightModel {
    /// The quadratic model `φ₀ = Σ λ_i |z_i|²`, valid everywhere.
    pub fn model(lambdas: &[f64]) -> Result<Self> {
        Self::new(lambdas, ZPoly::zero(lambdas.len()), None)
    }

    /// `radius = None` picks the default: unbounded when the top-degree part of
    /// the perturbation is nonnegative, otherwise an explicit radius is required.
    pub fn new(lambdas: &[f64], perturbation: ZPoly, radius: Option<f64>) -> Result<Self> {
        let n = lambdas.len();
        if n == 0 {
            return Err(invalid("weight needs at least one coordinate"));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(invalid("weight eigenvalues must be finite"));
        }
        if perturbation.dim() != n {
            return Err(invalid(format!("perturbation lives in dimension {}, weight in {}", perturbation.dim(), n)));
        }
        if !perturbation.is_real(1e-14) {
            return Err(invalid("perturbation must be real valued"));
        }
        if let Some(d) = perturbation.min_degree() {
            if d < 3 {
                return Err(invalid(format!("perturbation must vanish to order 3 at the origin, found a degree {d} term")));
            }
        }
        let radius = match radius {
            Some(r) if r > 0.0 && !r.is_nan() => r,
            Some(r) => return Err(invalid(format!("validity radius must be positive, got {r}"))),
            None => default_radius(&perturbation).ok_or_else(|| {
                invalid("perturbation is not bounded below at infinity; set a finite validity radius")
            })?,
        };
        let d_z: Vec<ZPoly> = (0..n).map(|i| perturbation.d_z(i)).collect();
        let d_zbar: Vec<ZPoly> = (0..n).map(|i| perturbation.d_zbar(i)).collect();
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                hess.push(d_z[i].d_zbar(j));
            }
        }
        Ok(WeightModel { lambdas: lambdas.to_vec(), perturbation, d_z, d_zbar, hess, radius })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn perturbation(&self) -> &ZPoly {
        &self.perturbation
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_model(&self) -> bool {
        self.perturbation.is_zero()
    }

    /// Order of vanishing of the perturbation at 0, capped at 4.
    pub fn vanishing_order(&self) -> u32 {
        self.perturbation.min_degree().map_or(4, |d| d.min(4))
    }

    /// Checks the stronger normal form available when no `λ_i` vanishes.
    pub fn check_normal_form(&self) -> Result<()> {
        if self.lambdas.iter().all(|l| *l != 0.0) && self.vanishing_order() < 4 {
            return Err(invalid("nondegenerate weight in normal form must have a perturbation of order 4"));
        }
        Ok(())
    }

    pub fn check_domain(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(invalid(format!("point has {} coordinates, weight has {}", z.len(), self.dim())));
        }
        let r = norm(z);
        if !(r <= self.radius) {
            return Err(Error::Domain { norm: r, radius: self.radius });
        }
        Ok(())
    }

    /// `k φ(z)` without the domain check.
    pub(crate) fn value_unchecked(&self, z: &[C64], k: f64) -> f64 {
        let quad: f64 = self.lambdas.iter().zip(z).map(|(l, zi)| l * zi.norm_sqr()).sum();
        k * (quad + self.perturbation.eval(z).re)
    }

    pub fn value(&self, z: &[C64], k: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(self.value_unchecked(z, k))
    }

    /// `∂(kφ)/∂z̄_i` without the domain check.
    pub(crate) fn dzbar_unchecked(&self, z: &[C64], k: f64, i: usize) -> C64 {
        (z[i] * self.lambdas[i] + self.d_zbar[i].eval(z)) * k
    }

    pub fn eval(&self, z: &[C64], k: f64) -> Result<WeightJet> {
        self.check_domain(z)?;
        let n = self.dim();
        let value = self.value_unchecked(z, k);
        let dz = (0..n).map(|i| (z[i].conj() * self.lambdas[i] + self.d_z[i].eval(z)) * k).collect();
        let dzbar = (0..n).map(|i| self.dzbar_unchecked(z, k, i)).collect();
        let hessian = DMatrix::from_fn(n, n, |i, j| {
            let base = if i == j { self.lambdas[i] } else { 0.0 };
            (c64(base, 0.0) + self.hess[i * n + j].eval(z)) * k
        });
        Ok(WeightJet { value, dz, dzbar, hessian })
    }

    /// `φ_(k)(z) = k φ(z/√k)`: the quadratic part is unchanged and a degree `d`
    /// term picks up `k^{1 - d/2}`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(invalid(format!("scaling parameter must be positive, got {k}")));
        }
        let s = libm::sqrt(k);
        let p = self.perturbation.dilate(1.0 / s).scale(c64(k, 0.0));
        Self::new(&self.lambdas, p, Some(self.radius * s))
    }
}

/// `∞` when the top-degree homogeneous part is even and nonnegative on the unit sphere.
pub fn default_radius(p: &ZPoly) -> Option<f64> {
    if p.is_zero() {
        return Some(f64::INFINITY);
    }
    let top_degree = p.max_degree();
    if top_degree % 2 == 1 {
        return None;
    }
    let top = p.homogeneous_part(top_degree);
    let n = p.dim();
    let ok = sphere_samples(n, 4096).iter().all(|z| top.eval(z).re >= -1e-12);
    ok.then_some(f64::INFINITY)
}

fn sphere_samples(n: usize, count: usize) -> Vec<Vec<C64>> {
    const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let halton = |mut i: usize, b: u32| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b as usize) as f64;
            i /= b as usize;
        }
        r
    };
    (1..=count)
        .filter_map(|s| {
            let x: Vec<f64> = (0..2 * n).map(|a| 2.0 * halton(s, PRIMES[a % PRIMES.len()]) - 1.0).collect();
            let r = libm::sqrt(x.iter().map(|v| v * v).sum());
            (r > 1e-6).then(|| (0..n).map(|i| c64(x[2 * i] / r, x[2 * i + 1] / r)).collect())
        })
        .collect()
}

/// `h(z) = I + P(z)` with `P` Hermitian and vanishing at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricModel {
    n: usize,
    entries: Vec<ZPoly>,
    radius: f64,
}

impl MetricModel {
    pub fn flat(n: usize) -> Self {
        MetricModel { n, entries: vec![ZPoly::zero(n); n * n], radius: f64::INFINITY }
    }

    /// Each term `(i, j, m, c)` adds `c·m` at `(i, j)` and its conjugate at `(j, i)`,
    /// so diagonal entries receive `Re(c·m)`.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (usize, usize, Monomial, C64)>, radius: Option<f64>) -> Result<Self> {
        let mut entries = vec![ZPoly::zero(n); n * n];
        for (i, j, m, c) in terms {
            if i >= n || j >= n {
                return Err(invalid(format!("metric entry ({}, {}) outside dimension {n}", i + 1, j + 1)));
            }
            if m.degree() == 0 {
                return Err(invalid("metric perturbation must vanish at the origin"));
            }
            let half = if i == j { 0.5 } else { 1.0 };
            let t = ZPoly::from_terms(n, [(m, c * half)])?;
            entries[i * n + j] = entries[i * n + j].add(&t);
            entries[j * n + i] = entries[j * n + i].add(&t.conj());
        }
        let radius = radius.unwrap_or(f64::INFINITY);
        if !(radius > 0.0) {
            return Err(invalid("metric validity radius must be positive"));
        }
        Ok(MetricModel { n, entries, radius })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_flat(&self) -> bool {
        self.entries.iter().all(ZPoly::is_zero)
    }

    pub fn entry(&self, i: usize, j: usize) -> &ZPoly {
        &self.entries[i * self.n + j]
    }

    /// `h(z)`; fails outside the radius or where `h` is not positive definite.
    pub fn eval(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        if z.len() != self.n {
            return Err(invalid(format!("point has {} coordinates, metric has {}", z.len(), self.n)));
        }
        let r = norm(z);
        if !(r <= self.radius) {
            return Err(Error::Domain { norm: r, radius: self.radius });
        }
        let h = self.eval_unchecked(z);
        if !self.is_flat() && !crate::form::is_positive_definite(&h) {
            return Err(Error::InvalidMetric(format!("metric is not positive definite at |z| = {r}")));
        }
        Ok(h)
    }

    pub(crate) fn eval_unchecked(&self, z: &[C64]) -> DMatrix<C64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            c64(base, 0.0) + self.entries[i * n + j].eval(z)
        })
    }

    /// `h_(k)(z) = h(z/√k)`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(invalid(format!("scaling parameter must be positive, got {k}")));
        }
        let s = libm::sqrt(k);
        Ok(MetricModel {
            n: self.n,
            entries: self.entries.iter().map(|p| p.dilate(1.0 / s)).collect(),
            radius: self.radius * s,
        })
    }
}

/// The curvature operator in an `h`-orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub matrix: DMatrix<C64>,
    /// ascending
    pub eigenvalues: Vec<f64>,
}

/// `Θ̇` defined by `⟨Θ̇ v₁ | v₂⟩_ω = Θ(v₁ ∧ v̄₂)`.
pub fn curvature_at(w: &WeightModel, m: &MetricModel, z: &[C64]) -> Result<CurvatureData> {
    if w.dim() != m.dim() {
        return Err(invalid("weight and metric dimensions differ"));
    }
    let jet = w.eval(z, 1.0)?;
    let h = m.eval(z)?;
    if !crate::form::is_positive_definite(&h) {
        return Err(Error::InvalidMetric(String::from("metric is not positive definite")));
    }
    let chol = h
        .transpose()
        .cholesky()
        .ok_or_else(|| Error::InvalidMetric(String::from("metric is not positive definite")))?;
    let l = chol.l();
    let theta = jet.hessian.transpose() * c64(2.0, 0.0);
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric(String::from("metric factor is singular")))?;
    let c = &linv * theta * linv.adjoint();
    let c = (&c + c.adjoint()) * c64(0.5, 0.0);
    let eigenvalues = hermitian_eigh(&c)?.eigenvalues;
    Ok(CurvatureData { matrix: c, eigenvalues })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub negatives: usize,
    pub positives: usize,
    pub degenerate: bool,
}

impl Signature {
    /// Membership in `M(q)`.
    pub fn in_mq(&self, q: usize) -> bool {
        !self.degenerate && self.negatives == q
    }
}

pub const DEGENERACY_REL_TOL: f64 = 1e-9;

/// `tol = None` uses `1e-9 · max |eigenvalue|`.
pub fn signature(c: &CurvatureData, tol: Option<f64>) -> Signature {
    let max = c.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let tol = tol.unwrap_or(DEGENERACY_REL_TOL * max);
    let degenerate = max == 0.0 || c.eigenvalues.iter().any(|e| e.abs() <= tol);
    Signature {
        negatives: c.eigenvalues.iter().filter(|e| **e < -tol).count(),
        positives: c.eigenvalues.iter().filter(|e| **e > tol).count(),
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMode {
    /// `gap(k) ≥ k^{-d} / c`
    Polynomial { d: f64, c: f64 },
    /// `gap(k) ≥ e^{-2 rate λ_min √k} / c`
    Exponential { rate: f64, lambda_min: f64, c: f64 },
}

impl GapMode {
    pub fn bound(&self, k: u64) -> f64 {
        let kf = k as f64;
        match *self {
            GapMode::Polynomial { d, c } => libm::pow(kf, -d) / c,
            GapMode::Exponential { rate, lambda_min, c } => libm::exp(-2.0 * rate * lambda_min * libm::sqrt(kf)) / c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCheck {
    pub k: u64,
    pub gap: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapClassification {
    pub mode: GapMode,
    pub k0: u64,
    pub checks: Vec<GapCheck>,
    pub pass: bool,
}

/// Checks unscaled gaps against the mode's lower bound for every sampled `k ≥ k0`.
pub fn classify_gap(gaps: &[(u64, f64)], mode: GapMode, k0: u64) -> Result<GapClassification> {
    if gaps.is_empty() {
        return Err(invalid("gap classification needs at least one sample"));
    }
    if let Some((k, g)) = gaps.iter().find(|(_, g)| !(*g >= 0.0)) {
        return Err(invalid(format!("gap at k = {k} is not a nonnegative number: {g}")));
    }
    match mode {
        GapMode::Polynomial { c, .. } | GapMode::Exponential { c, .. } if !(c > 0.0) => {
            return Err(invalid("gap constant must be positive"))
        }
        GapMode::Exponential { lambda_min, .. } if !(lambda_min > 0.0) => {
            return Err(invalid("exponential gap mode needs all eigenvalues positive"))
        }
        _ => {}
    }
    let checks: Vec<GapCheck> = gaps
        .iter()
        .filter(|(k, _)| *k >= k0)
        .map(|&(k, gap)| {
            let bound = mode.bound(k);
            GapCheck { k, gap, bound, pass: gap >= bound }
        })
        .collect();
    if checks.is_empty() {
        return Err(invalid(format!("no sampled k at or above {k0}")));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(GapClassification { mode, k0, checks, pass })
}
