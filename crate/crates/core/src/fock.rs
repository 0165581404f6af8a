//! Finite-`k` Bergman projectors onto weighted holomorphic polynomials.
//!
//! Kernels come in three conventions:
//!
//! * trivialized `B^s(z,w) = Σ ψ_i(z) conj(ψ_i(w)) e^{-2kφ(w)}`, which reproduces
//!   holomorphic `u` against plain `dV_ω`;
//! * localized `e^{-kφ(z)} B^s(z,w) e^{kφ(w)}`;
//! * scaled `k^{-n} K(z/√k, w/√k)` for any of the above.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::form::{KernelValue, MultiIndex};
use crate::geometry::{MetricModel, WeightModel};
use crate::numerics::{gram_orthonormalize, tensor_gauss_rule, GramTransform};
use crate::{c64, flat_volume_factor, C64};

pub const DEFAULT_DEGREE_CAP: [u32; 2] = [20, 10];
pub const DEFAULT_QUAD_ORDER: [usize; 2] = [64, 24];

/// Orthonormalized monomials `z^α`, `|α| ≤ D`, in `L²(e^{-2kφ} dV_ω)`.
#[derive(Debug, Clone)]
pub struct GramBasis {
    pub k: f64,
    pub degree_cap: u32,
    pub quad_order: usize,
    pub monomials: Vec<MultiIndex>,
    pub gram: DMatrix<C64>,
    pub transform: GramTransform,
    /// `T T*`, so `Σ ψ_i(z) conj(ψ_i(w)) = v(z)ᵀ C conj(v(w))` with `v_α(z) = z^α`
    coef: DMatrix<C64>,
    weight: WeightModel,
    /// quadrature nodes beyond the validity radius, skipped
    pub nodes_outside: usize,
    /// nodes where `e^{-2k·pert}` is below `1e-300`
    pub underflow_nodes: usize,
}

fn monomial_values(monomials: &[MultiIndex], z: &[C64], max_degree: u32) -> Vec<C64> {
    let pows: Vec<Vec<C64>> = z
        .iter()
        .map(|zi| {
            let mut p = Vec::with_capacity(max_degree as usize + 1);
            let mut acc = c64(1.0, 0.0);
            for _ in 0..=max_degree {
                p.push(acc);
                acc *= zi;
            }
            p
        })
        .collect();
    monomials
        .iter()
        .map(|a| a.0.iter().enumerate().map(|(i, e)| pows[i][*e as usize]).product())
        .collect()
}

pub fn monomial_gram(weight: &WeightModel, metric: &MetricModel, k: f64, degree_cap: u32, quad_order: usize) -> Result<GramBasis> {
    monomial_gram_with_tol(weight, metric, k, degree_cap, quad_order, crate::numerics::DEFAULT_PIVOT_TOL)
}

pub fn monomial_gram_with_tol(
    weight: &WeightModel,
    metric: &MetricModel,
    k: f64,
    degree_cap: u32,
    quad_order: usize,
    pivot_tol: f64,
) -> Result<GramBasis> {
    let n = weight.dim();
    if metric.dim() != n {
        return Err(invalid("weight and metric dimensions differ"));
    }
    if !(k > 0.0) {
        return Err(invalid(format!("k must be positive, got {k}")));
    }
    if let Some(l) = weight.lambdas().iter().find(|l| **l <= 0.0) {
        return Err(Error::UnsupportedSignature(format!(
            "holomorphic sections are not integrable with eigenvalue {l}; use the Laplacian pipeline"
        )));
    }
    let scales: Vec<f64> = weight.lambdas().iter().flat_map(|l| [k * l, k * l]).collect();
    let rule = tensor_gauss_rule(quad_order, &scales)?;
    let monomials = MultiIndex::all_up_to(n, degree_cap);
    let m = monomials.len();
    let radius = weight.radius().min(metric.radius());
    let volume = flat_volume_factor(n);
    let mut gram = DMatrix::<C64>::zeros(m, m);
    let (mut nodes_outside, mut underflow_nodes) = (0, 0);
    const CHUNK: usize = 2048;
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(CHUNK);
    let mut wts: Vec<f64> = Vec::with_capacity(CHUNK);
    let flush = |rows: &mut Vec<Vec<C64>>, wts: &mut Vec<f64>, gram: &mut DMatrix<C64>| {
        if rows.is_empty() {
            return;
        }
        let v = DMatrix::from_fn(rows.len(), m, |r, c| rows[r][c]);
        let wv = DMatrix::from_fn(rows.len(), m, |r, c| (rows[r][c] * wts[r]).conj());
        *gram += v.transpose() * wv;
        rows.clear();
        wts.clear();
    };
    for i in 0..rule.len() {
        let z = rule.complex_node(i);
        let r = libm::sqrt(z.iter().map(|c| c.norm_sqr()).sum());
        if r > radius {
            nodes_outside += 1;
            continue;
        }
        let pert = weight.value_unchecked(&z, k) - k * weight.lambdas().iter().zip(&z).map(|(l, c)| l * c.norm_sqr()).sum::<f64>();
        let log_factor = -2.0 * pert;
        if log_factor < -690.0 {
            underflow_nodes += 1;
        }
        let det = if metric.is_flat() {
            1.0
        } else {
            let h = metric.eval(&z)?;
            h.determinant().re
        };
        let w = rule.weight(i) * volume * det * libm::exp(log_factor);
        if w == 0.0 {
            continue;
        }
        rows.push(monomial_values(&monomials, &z, degree_cap));
        wts.push(w);
        if rows.len() == CHUNK {
            flush(&mut rows, &mut wts, &mut gram);
        }
    }
    flush(&mut rows, &mut wts, &mut gram);
    let gram = (&gram + gram.adjoint()) * c64(0.5, 0.0);
    let transform = gram_orthonormalize(&gram, pivot_tol)?;
    let coef = &transform.transform * transform.transform.adjoint();
    Ok(GramBasis {
        k,
        degree_cap,
        quad_order,
        monomials,
        gram,
        transform,
        coef,
        weight: weight.clone(),
        nodes_outside,
        underflow_nodes,
    })
}

impl GramBasis {
    pub fn dim(&self) -> usize {
        self.weight.dim()
    }

    pub fn weight(&self) -> &WeightModel {
        &self.weight
    }

    pub fn retained_dim(&self) -> usize {
        self.transform.retained.len()
    }

    /// `T T* G`, the projection onto the retained span in monomial coefficients.
    pub fn projection_matrix(&self) -> DMatrix<C64> {
        &self.coef * &self.gram
    }

    /// `Σ_i ψ_i(z) conj(ψ_i(w))` without weight factors.
    pub fn reproducing_sum(&self, z: &[C64], w: &[C64]) -> Result<C64> {
        self.weight.check_domain(z)?;
        self.weight.check_domain(w)?;
        let vz = monomial_values(&self.monomials, z, self.degree_cap);
        let vw: Vec<C64> = monomial_values(&self.monomials, w, self.degree_cap).iter().map(|c| c.conj()).collect();
        let m = vz.len();
        let mut acc = c64(0.0, 0.0);
        for a in 0..m {
            let mut row = c64(0.0, 0.0);
            for b in 0..m {
                row += self.coef[(a, b)] * vw[b];
            }
            acc += vz[a] * row;
        }
        Ok(acc)
    }

    /// Orthonormal functions `ψ_i(z)` in pivot order.
    pub fn orthonormal_values(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.weight.check_domain(z)?;
        let vz = monomial_values(&self.monomials, z, self.degree_cap);
        let t = &self.transform.transform;
        Ok((0..t.ncols()).map(|i| (0..t.nrows()).map(|a| vz[a] * t[(a, i)]).sum()).collect())
    }
}

pub fn bergman_kernel_trivialized(basis: &GramBasis, z: &[C64], w: &[C64]) -> Result<C64> {
    let s = basis.reproducing_sum(z, w)?;
    Ok(s * libm::exp(-2.0 * basis.weight.value(w, basis.k)?))
}

/// `e^{-kφ(z)} B e^{kφ(w)}` applied to an already computed trivialized value.
pub fn localize_kernel(value: C64, weight: &WeightModel, k: f64, z: &[C64], w: &[C64]) -> Result<C64> {
    let e = weight.value(w, k)? - weight.value(z, k)?;
    Ok(value * libm::exp(e))
}

/// Localized kernel evaluated directly, `Σ ψ_i(z) conj(ψ_i(w)) e^{-kφ(z) - kφ(w)}`.
pub fn bergman_kernel_localized(basis: &GramBasis, z: &[C64], w: &[C64]) -> Result<C64> {
    let s = basis.reproducing_sum(z, w)?;
    Ok(s * libm::exp(-basis.weight.value(z, basis.k)? - basis.weight.value(w, basis.k)?))
}

/// Values that can be multiplied by the scaling factor `k^{-n}`.
pub trait KernelScale: Sized {
    fn scale_by(self, s: f64) -> Self;
}

impl KernelScale for C64 {
    fn scale_by(self, s: f64) -> Self {
        self * s
    }
}

impl KernelScale for f64 {
    fn scale_by(self, s: f64) -> Self {
        self * s
    }
}

impl KernelScale for KernelValue {
    fn scale_by(mut self, s: f64) -> Self {
        self.matrix *= c64(s, 0.0);
        self
    }
}

/// `k^{-n} K(z/√k, w/√k)`.
pub fn scaled_kernel<T: KernelScale>(
    eval: impl Fn(&[C64], &[C64]) -> Result<T>,
    k: f64,
    n: usize,
    z: &[C64],
    w: &[C64],
) -> Result<T> {
    if !(k > 0.0) {
        return Err(invalid(format!("k must be positive, got {k}")));
    }
    let s = 1.0 / libm::sqrt(k);
    let zs: Vec<C64> = z.iter().map(|c| c * s).collect();
    let ws: Vec<C64> = w.iter().map(|c| c * s).collect();
    Ok(eval(&zs, &ws)?.scale_by(libm::pow(k, -(n as f64))))
}

/// Points of the box grid `linspace(-r, r, p)` over all `2n` real coordinates
/// that lie in the closed ball of radius `r`.
pub fn ball_grid(n: usize, r: f64, p: usize) -> Vec<Vec<C64>> {
    let axis: Vec<f64> = if p <= 1 { vec![0.0] } else { (0..p).map(|i| -r + 2.0 * r * i as f64 / (p - 1) as f64).collect() };
    let total = axis.len().pow(2 * n as u32);
    let mut out = Vec::new();
    let mut digits = vec![0usize; 2 * n];
    for _ in 0..total {
        let x: Vec<f64> = digits.iter().map(|&d| axis[d]).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= r * r * (1.0 + 1e-12) {
            out.push(x.chunks(2).map(|c| c64(c[0], c[1])).collect());
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < axis.len() {
                break;
            }
            *d = 0;
        }
    }
    out
}
