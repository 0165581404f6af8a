//! Gauss–Hermite tensor quadrature, Hermitian eigendecomposition and
//! Gram-matrix orthonormalization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::{c64, C64};

/// Nodes and weights of the `order`-point rule for `∫ f(t) e^{-t²} dt`, nodes ascending.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 {
        return Err(invalid("quadrature order must be at least 1"));
    }
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let n = order;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => libm::sqrt(2.0 * nf + 1.0) - 1.85575 * libm::pow(2.0 * nf + 1.0, -0.16667),
            1 => z - 1.14 * libm::pow(nf, 0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * libm::sqrt(2.0 / (jf + 1.0)) * p2 - libm::sqrt(jf / (jf + 1.0)) * p3;
            }
            pp = libm::sqrt(2.0 * nf) * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            z = 0.0;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    Ok((x, w))
}

/// Tensor rule for `∫_{R^d} f(x) e^{-2 Σ s_j x_j²} dx`; the Gaussian is in the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scales: Vec<f64>,
}

pub fn tensor_gauss_rule(order: usize, scales: &[f64]) -> Result<QuadratureRule> {
    if scales.is_empty() {
        return Err(invalid("quadrature needs at least one axis"));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(invalid(format!("quadrature scale must be positive and finite, got {s}")));
    }
    let (t, tw) = gauss_hermite(order)?;
    let dim = scales.len();
    let count = order
        .checked_pow(dim as u32)
        .ok_or_else(|| invalid("quadrature node count overflows"))?;
    let axes: Vec<(Vec<f64>, Vec<f64>)> = scales
        .iter()
        .map(|s| {
            let r = libm::sqrt(2.0 * s);
            (t.iter().map(|v| v / r).collect(), tw.iter().map(|v| v / r).collect())
        })
        .collect();
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    let mut digits = vec![0usize; dim];
    for _ in 0..count {
        let mut wt = 1.0;
        for (a, &d) in digits.iter().enumerate() {
            nodes.push(axes[a].0[d]);
            wt *= axes[a].1[d];
        }
        weights.push(wt);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < order {
                break;
            }
            *d = 0;
        }
    }
    Ok(QuadratureRule { dim, nodes, weights, scales: scales.to_vec() })
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node `i` read as a point of `C^{d/2}` with coordinates `x_{2j} + i x_{2j+1}`.
    pub fn complex_node(&self, i: usize) -> Vec<C64> {
        self.node(i).chunks(2).map(|p| c64(p[0], p.get(1).copied().unwrap_or(0.0))).collect()
    }

    /// `Π √(π / (2 s_j))`.
    pub fn gaussian_mass(&self) -> f64 {
        self.scales.iter().map(|s| libm::sqrt(core::f64::consts::PI / (2.0 * s))).product()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> C64) -> C64 {
        let terms: Vec<C64> = (0..self.len()).map(|i| f(self.node(i)) * self.weights[i]).collect();
        pairwise_sum(&terms)
    }
}

/// Pairwise summation with a fixed split, so results do not depend on scheduling.
pub fn pairwise_sum(v: &[C64]) -> C64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// columns are eigenvectors
    pub vectors: DMatrix<C64>,
}

fn frobenius(a: &DMatrix<C64>) -> f64 {
    libm::sqrt(a.iter().map(|c| c.norm_sqr()).sum())
}

pub fn hermitian_eigh(a: &DMatrix<C64>) -> Result<SpectralData> {
    if !a.is_square() {
        return Err(invalid("eigendecomposition needs a square matrix"));
    }
    if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let n = a.nrows();
    let scale = frobenius(a);
    let dev = frobenius(&(a - a.adjoint()));
    if dev > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(invalid(format!("matrix is not Hermitian: deviation {dev:e} against norm {scale:e}")));
    }
    let h = (a + a.adjoint()) * c64(0.5, 0.0);
    let (values, vectors) = if h.iter().all(|c| c.im == 0.0) {
        let eig = h.map(|c| c.re).symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors.map(|v| c64(v, 0.0)))
    } else {
        let eig = h.symmetric_eigen();
        (eig.eigenvalues, eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(SpectralData { eigenvalues, vectors })
}

impl SpectralData {
    pub fn basis_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()))
    }

    /// Indices `i` with `μ_i ≤ c + tol_abs`.
    pub fn indices_at_most(&self, c: f64, tol_abs: f64) -> Vec<usize> {
        self.eigenvalues.iter().enumerate().filter(|(_, m)| **m <= c + tol_abs).map(|(i, _)| i).collect()
    }

    /// `Σ_{μ_i ≤ c + tol_abs} v_i v_i*`.
    pub fn projector(&self, c: f64, tol_abs: f64) -> DMatrix<C64> {
        let idx = self.indices_at_most(c, tol_abs);
        let v = self.vectors.select_columns(idx.iter());
        &v * v.adjoint()
    }
}

/// Columns of `transform` are coefficient vectors of an orthonormal basis of
/// the retained span, in pivot order.
#[derive(Debug, Clone, PartialEq)]
pub struct GramTransform {
    pub transform: DMatrix<C64>,
    pub retained: Vec<usize>,
}

pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;

/// Diagonal equilibration followed by pivoted Cholesky.
pub fn gram_orthonormalize(g: &DMatrix<C64>, rel_tol: f64) -> Result<GramTransform> {
    if !g.is_square() {
        return Err(Error::InvalidGram(format!("Gram matrix is {}x{}", g.nrows(), g.ncols())));
    }
    if g.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidGram("Gram matrix has non-finite entries".into()));
    }
    let m = g.nrows();
    let dmax = (0..m).fold(0.0f64, |a, i| a.max(g[(i, i)].re));
    if let Some(i) = (0..m).find(|&i| g[(i, i)].re < -1e-12 * dmax) {
        return Err(Error::InvalidGram(format!("negative diagonal entry at {i}")));
    }
    let s: Vec<f64> = (0..m).map(|i| if g[(i, i)].re > 0.0 { 1.0 / libm::sqrt(g[(i, i)].re) } else { 0.0 }).collect();
    let ge = DMatrix::from_fn(m, m, |i, j| g[(i, j)] * (s[i] * s[j]));
    // Schur complement diagonal and the rows of L computed so far
    let mut diag: Vec<f64> = (0..m).map(|i| ge[(i, i)].re).collect();
    let mut lrows: Vec<Vec<C64>> = vec![Vec::new(); m];
    let mut pivots: Vec<usize> = Vec::new();
    let mut used = vec![false; m];
    loop {
        let best = (0..m).filter(|&i| !used[i]).max_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(b.cmp(&a)));
        let Some(p) = best else { break };
        if diag[p] <= rel_tol {
            if let Some(i) = (0..m).find(|&i| !used[i] && diag[i] < -1e-8) {
                return Err(Error::InvalidGram(format!("Gram matrix is indefinite (pivot {i}: {:e})", diag[i])));
            }
            break;
        }
        let r = pivots.len();
        let lpp = libm::sqrt(diag[p]);
        used[p] = true;
        let lp = lrows[p].clone();
        for i in 0..m {
            if used[i] {
                continue;
            }
            let mut v = ge[(i, p)];
            for t in 0..r {
                v -= lrows[i][t] * lp[t].conj();
            }
            let lip = v / lpp;
            diag[i] -= lip.norm_sqr();
            lrows[i].push(lip);
        }
        lrows[p].push(c64(lpp, 0.0));
        pivots.push(p);
    }
    let r = pivots.len();
    // leading block in pivot order: B = L_r L_r*
    let lr = DMatrix::from_fn(r, r, |a, b| lrows[pivots[a]].get(b).copied().unwrap_or_default());
    let lr_inv_adj = lr
        .solve_lower_triangular(&DMatrix::identity(r, r))
        .ok_or_else(|| Error::InvalidGram("singular pivot block".into()))?
        .adjoint();
    let mut t = DMatrix::zeros(m, r);
    for (a, &p) in pivots.iter().enumerate() {
        for b in 0..r {
            t[(p, b)] = lr_inv_adj[(a, b)] * s[p];
        }
    }
    Ok(GramTransform { transform: t, retained: pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn hermite_rule_moments() {
        for order in [1usize, 2, 5, 16, 64, 100] {
            let (x, w) = gauss_hermite(order).unwrap();
            let m0: f64 = w.iter().sum();
            assert!((m0 - libm::sqrt(PI)).abs() < 1e-13, "order {order}: {m0}");
            if order >= 2 {
                let m2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
                assert!((m2 - libm::sqrt(PI) / 2.0).abs() < 1e-13);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn scaled_one_dimensional_examples() {
        let r = tensor_gauss_rule(8, &[1.0]).unwrap();
        let g = (PI / 2.0).sqrt();
        assert!((r.integrate(|_| c64(1.0, 0.0)).re - g).abs() < 1e-14);
        assert!((r.integrate(|x| c64(x[0] * x[0], 0.0)).re - g / 4.0).abs() < 1e-14);
        assert!(r.integrate(|x| c64(x[0].powi(3), 0.0)).norm() < 1e-15);
        assert!(tensor_gauss_rule(8, &[0.0]).is_err());
        assert!(tensor_gauss_rule(0, &[1.0]).is_err());
    }

    #[test]
    fn quartic_moment_in_the_plane() {
        // ∫ |z|⁴ e^{-2|z|²} dm = π · 2! / 2³
        let exact = PI / 4.0;
        for order in [8, 16, 32] {
            let r = tensor_gauss_rule(order, &[1.0, 1.0]).unwrap();
            assert_eq!(r.len(), order * order);
            let v = r.integrate(|x| c64((x[0] * x[0] + x[1] * x[1]).powi(2), 0.0)).re;
            assert!((v - exact).abs() < 1e-12 * exact);
            assert!((r.weights().iter().sum::<f64>() - r.gaussian_mass()).abs() < 1e-13 * r.gaussian_mass());
        }
    }

    #[test]
    fn eigh_examples() {
        let s = hermitian_eigh(&DMatrix::identity(5, 5)).unwrap();
        assert!(s.eigenvalues.iter().all(|e| (e - 1.0).abs() < 1e-15));
        let a = DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let s = hermitian_eigh(&a).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15 && (s.eigenvalues[1] - 1.0).abs() < 1e-15);
        let mut bad = a.clone();
        bad[(0, 0)] = c64(f64::NAN, 0.0);
        assert!(hermitian_eigh(&bad).is_err());
    }

    #[test]
    fn gram_examples() {
        let t = gram_orthonormalize(&DMatrix::identity(3, 3), DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(t.retained.len(), 3);
        assert!((t.transform.clone() - DMatrix::<C64>::identity(3, 3)).norm() < 1e-15);
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(4.0, 0.0), c64(1.0, 0.0)]));
        let t = gram_orthonormalize(&g, DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(t.retained, vec![0, 1]);
        assert!((t.transform[(0, 0)].re - 0.5).abs() < 1e-15 && (t.transform[(1, 1)].re - 1.0).abs() < 1e-15);
        let v = nalgebra::DVector::from_vec(vec![c64(1.0, 2.0), c64(-0.5, 0.1), c64(3.0, 0.0)]);
        let rank1 = &v * v.adjoint();
        assert_eq!(gram_orthonormalize(&rank1, 1e-10).unwrap().retained.len(), 1);
        let indefinite = DMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(2.0, 0.0), c64(2.0, 0.0), c64(1.0, 0.0)]);
        assert!(gram_orthonormalize(&indefinite, 1e-10).is_err());
    }
}
