//! The model case `φ₀ = Σ λ_i |z_i|²` with the flat metric: orthonormal basis,
//! norms, closed-form Bergman kernel and the model Laplacian.
//!
//! Coordinates stay in the caller's order. The negative directions, sorted,
//! form the index `I` carrying the nonzero kernel entry; the ordering is a
//! stable partition so no sign enters.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::form::{FormIndex, FormValue, KernelValue, MultiIndex};
use crate::{c64, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    lambdas: Vec<f64>,
    /// `permutation[j]` is the caller coordinate placed at position `j` (negatives first)
    permutation: Vec<usize>,
    negatives: FormIndex,
}

impl ModelSpec {
    pub fn new(lambdas: &[f64]) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(invalid("model needs at least one coordinate"));
        }
        if let Some(l) = lambdas.iter().find(|l| **l == 0.0 || !l.is_finite()) {
            return Err(invalid(format!("model eigenvalues must be finite and nonzero, got {l}")));
        }
        let neg: Vec<usize> = (0..lambdas.len()).filter(|&i| lambdas[i] < 0.0).collect();
        let pos = (0..lambdas.len()).filter(|&i| lambdas[i] > 0.0);
        let permutation = neg.iter().copied().chain(pos).collect();
        Ok(ModelSpec { lambdas: lambdas.to_vec(), permutation, negatives: FormIndex::new(neg)? })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Number of negative eigenvalues.
    pub fn q0(&self) -> usize {
        self.negatives.degree()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn negatives(&self) -> &FormIndex {
        &self.negatives
    }

    /// `|λ₁ ⋯ λ_n| / π^n`, the diagonal value at the origin.
    pub fn diagonal_constant(&self) -> f64 {
        self.lambdas.iter().map(|l| l.abs() / PI).product()
    }

    fn check_point(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(invalid(format!("point has {} coordinates, model has {}", z.len(), self.dim())));
        }
        Ok(())
    }
}

/// `ln(π^n α! / (2^{|α|} [λ]^{α+1}))`.
pub fn ln_model_basis_norm2(spec: &ModelSpec, alpha: &MultiIndex) -> Result<f64> {
    if alpha.dim() != spec.dim() {
        return Err(invalid("multi-index dimension does not match the model"));
    }
    let n = spec.dim() as f64;
    let mut v = n * libm::log(PI) + alpha.ln_factorial() - alpha.degree() as f64 * core::f64::consts::LN_2;
    for (a, l) in alpha.0.iter().zip(&spec.lambdas) {
        v -= (*a as f64 + 1.0) * libm::log(l.abs());
    }
    Ok(v)
}

/// `‖z^α_q e^{-Σ|λ_i||z_i|²}‖²` with respect to `dV = 2^n dm`.
pub fn model_basis_norm2(spec: &ModelSpec, alpha: &MultiIndex) -> Result<f64> {
    if alpha.degree() <= 60 {
        if alpha.dim() != spec.dim() {
            return Err(invalid("multi-index dimension does not match the model"));
        }
        let mut v = libm::pow(PI, spec.dim() as f64) * alpha.factorial() / libm::pow(2.0, alpha.degree() as f64);
        for (a, l) in alpha.0.iter().zip(&spec.lambdas) {
            v /= libm::pow(l.abs(), *a as f64 + 1.0);
        }
        Ok(v)
    } else {
        Ok(libm::exp(ln_model_basis_norm2(spec, alpha)?))
    }
}

fn prefactor(spec: &ModelSpec, alpha: &MultiIndex) -> Result<f64> {
    if alpha.degree() <= 30 {
        Ok(1.0 / libm::sqrt(model_basis_norm2(spec, alpha)?))
    } else {
        Ok(libm::exp(-0.5 * ln_model_basis_norm2(spec, alpha)?))
    }
}

/// `z^α` with the negative coordinates conjugated.
fn twisted_monomial(spec: &ModelSpec, alpha: &MultiIndex, z: &[C64]) -> C64 {
    let mut v = c64(1.0, 0.0);
    for (i, zi) in z.iter().enumerate() {
        let zi = if spec.lambdas[i] < 0.0 { zi.conj() } else { *zi };
        v *= zi.powu(alpha.0[i]);
    }
    v
}

fn envelope(spec: &ModelSpec, z: &[C64]) -> f64 {
    libm::exp(-spec.lambdas.iter().zip(z).map(|(l, zi)| l.abs() * zi.norm_sqr()).sum::<f64>())
}

/// The scalar coefficient of `Ψ_α(z)` on `dz̄^I`.
pub fn model_basis_coefficient(spec: &ModelSpec, alpha: &MultiIndex, z: &[C64]) -> Result<C64> {
    spec.check_point(z)?;
    Ok(twisted_monomial(spec, alpha, z) * (prefactor(spec, alpha)? * envelope(spec, z)))
}

pub fn model_basis_eval(spec: &ModelSpec, alpha: &MultiIndex, z: &[C64]) -> Result<FormValue> {
    let c = model_basis_coefficient(spec, alpha, z)?;
    FormValue::basis(spec.dim(), &spec.negatives, c)
}

/// Coefficients of `Ψ_α(z)` for every `α` of [`MultiIndex::all_up_to`], in that order.
pub fn model_basis_coefficients(spec: &ModelSpec, z: &[C64], max_degree: u32) -> Result<Vec<C64>> {
    spec.check_point(z)?;
    let env = envelope(spec, z);
    MultiIndex::all_up_to(spec.dim(), max_degree)
        .iter()
        .map(|a| Ok(twisted_monomial(spec, a, z) * (prefactor(spec, a)? * env)))
        .collect()
}

/// Closed-form localized Bergman kernel of the model in degree `q0`.
pub fn model_kernel(spec: &ModelSpec, z: &[C64], w: &[C64]) -> Result<KernelValue> {
    spec.check_point(z)?;
    spec.check_point(w)?;
    let mut e = c64(0.0, 0.0);
    for i in 0..spec.dim() {
        let l = spec.lambdas[i].abs();
        let cross = if spec.lambdas[i] < 0.0 { z[i].conj() * w[i] } else { z[i] * w[i].conj() };
        e += cross * (2.0 * l) - c64(l * (z[i].norm_sqr() + w[i].norm_sqr()), 0.0);
    }
    let mut k = KernelValue::zero(spec.dim(), spec.q0())?;
    let r = crate::form::form_rank(&spec.negatives, spec.dim());
    k.matrix[(r, r)] = e.exp() * spec.diagonal_constant();
    Ok(k)
}

/// The model kernel in degree `q`; identically zero unless `q = q0`.
pub fn model_kernel_in_degree(spec: &ModelSpec, q: usize, z: &[C64], w: &[C64]) -> Result<KernelValue> {
    if q == spec.q0() {
        model_kernel(spec, z, w)
    } else {
        spec.check_point(z)?;
        spec.check_point(w)?;
        KernelValue::zero(spec.dim(), q)
    }
}

/// `Σ_{|α| ≤ N} Ψ_α(z) ⊗ Ψ_α(w)*`.
pub fn model_kernel_series(spec: &ModelSpec, z: &[C64], w: &[C64], cutoff: u32) -> Result<KernelValue> {
    let a = model_basis_coefficients(spec, z, cutoff)?;
    let b = model_basis_coefficients(spec, w, cutoff)?;
    Ok(series_from_coefficients(spec, &a, &b))
}

/// Kernel value from precomputed [`model_basis_coefficients`] at `z` and `w`.
pub fn series_from_coefficients(spec: &ModelSpec, a: &[C64], b: &[C64]) -> KernelValue {
    let mut k = KernelValue::zero(spec.dim(), spec.q0()).expect("valid model degree");
    let r = crate::form::form_rank(&spec.negatives, spec.dim());
    k.matrix[(r, r)] = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    k
}

/// Value and first/second derivatives of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub value: C64,
    pub dz: Vec<C64>,
    pub dzbar: Vec<C64>,
    /// `∂²f/∂z_i∂z̄_i`
    pub dzdzbar: Vec<C64>,
}

impl ScalarJet {
    pub fn dim(&self) -> usize {
        self.dz.len()
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.dz.len() != n || self.dzbar.len() != n || self.dzdzbar.len() != n {
            return Err(invalid(format!("jet does not carry all derivatives in dimension {n}")));
        }
        Ok(())
    }
}

/// `□ (f dz̄^I)` for `φ₀ = Σ λ_i|z_i|²` and the flat metric, as the coefficient on `dz̄^I`:
/// `Σ_i (−f_{z̄_i z_i} + φ₀_{z_i} f_{z̄_i} − φ₀_{z̄_i} f_{z_i}) + (Σ_{i∈I} λ_i − Σ_{i∉I} λ_i + |∂̄φ₀|²) f`.
pub fn model_laplacian_apply(lambdas: &[f64], f: &ScalarJet, index: &FormIndex, z: &[C64]) -> Result<C64> {
    let n = lambdas.len();
    f.check(n)?;
    if z.len() != n {
        return Err(invalid("point dimension does not match the weight"));
    }
    if index.as_slice().iter().any(|&i| i >= n) {
        return Err(invalid("form index outside the dimension"));
    }
    let mut out = c64(0.0, 0.0);
    let mut constant = 0.0;
    for i in 0..n {
        let l = lambdas[i];
        out += -f.dzdzbar[i] + z[i].conj() * l * f.dzbar[i] - z[i] * l * f.dz[i];
        constant += if index.contains(i) { l } else { -l };
        constant += l * l * z[i].norm_sqr();
    }
    Ok(out + f.value * constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn jet_gaussian(l: f64, z: C64) -> ScalarJet {
        // f = e^{-l|z|²}
        let e = libm::exp(-l * z.norm_sqr());
        ScalarJet {
            value: c64(e, 0.0),
            dz: vec![-z.conj() * l * e],
            dzbar: vec![-z * l * e],
            dzdzbar: vec![c64((-l + l * l * z.norm_sqr()) * e, 0.0)],
        }
    }

    #[test]
    fn norms_and_basis_values() {
        let s = ModelSpec::new(&[1.0]).unwrap();
        assert!((model_basis_norm2(&s, &MultiIndex(vec![0])).unwrap() - PI).abs() < 1e-15);
        assert!((model_basis_norm2(&s, &MultiIndex(vec![1])).unwrap() - PI / 2.0).abs() < 1e-15);
        let big = MultiIndex(vec![70]);
        let direct = libm::exp(ln_model_basis_norm2(&s, &big).unwrap());
        assert!((model_basis_norm2(&s, &big).unwrap() / direct - 1.0).abs() < 1e-12);
        let z0 = [c64(0.0, 0.0)];
        let v = model_basis_coefficient(&s, &MultiIndex(vec![0]), &z0).unwrap();
        assert!((v.re - 1.0 / PI.sqrt()).abs() < 1e-15);
        let v = model_basis_coefficient(&s, &MultiIndex(vec![0]), &[c64(1.0, 0.0)]).unwrap();
        assert!((v.re - (-1.0f64).exp() / PI.sqrt()).abs() < 1e-15);
        let neg = ModelSpec::new(&[-1.0]).unwrap();
        let z = [c64(0.3, 0.4)];
        let v = model_basis_eval(&neg, &MultiIndex(vec![1]), &z).unwrap();
        let c = v.coeff(&FormIndex::new(vec![0]).unwrap());
        assert!(c.im < 0.0, "coefficient should follow z̄");
    }

    #[test]
    fn permutation_places_negatives_first() {
        let s = ModelSpec::new(&[2.0, -1.0, 3.0, -0.5]).unwrap();
        assert_eq!(s.permutation(), &[1, 3, 0, 2]);
        assert_eq!(s.q0(), 2);
        assert_eq!(s.negatives().as_slice(), &[1, 3]);
        assert!(ModelSpec::new(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn kernel_examples() {
        let s = ModelSpec::new(&[-1.0, 3.0]).unwrap();
        let o = [C64::default(); 2];
        let k = model_kernel(&s, &o, &o).unwrap();
        assert!((k.matrix[(0, 0)].re - 3.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(k.matrix[(1, 1)], C64::default());
        let s1 = ModelSpec::new(&[1.0]).unwrap();
        let k = model_kernel(&s1, &[c64(1.0, 0.0)], &[C64::default()]).unwrap();
        assert!((k.matrix[(0, 0)].re - (-1.0f64).exp() / PI).abs() < 1e-15);
        let z = [c64(0.2, -0.9), c64(1.1, 0.3)];
        let w = [c64(-0.4, 0.5), c64(0.0, -1.2)];
        let a = model_kernel(&s, &z, &w).unwrap();
        let b = model_kernel(&s, &w, &z).unwrap().adjoint();
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn series_examples() {
        let s = ModelSpec::new(&[1.0]).unwrap();
        let o = [C64::default()];
        let k0 = model_kernel_series(&s, &o, &o, 0).unwrap();
        assert!(k0.max_abs_diff(&model_kernel(&s, &o, &o).unwrap()) < 1e-15);
        let one = [c64(1.0, 0.0)];
        let k40 = model_kernel_series(&s, &one, &one, 40).unwrap();
        assert!(k40.max_abs_diff(&model_kernel(&s, &one, &one).unwrap()) < 1e-10);
        let k1 = model_kernel_series(&s, &one, &one, 1).unwrap();
        let k0 = model_kernel_series(&s, &one, &one, 0).unwrap();
        let psi1 = model_basis_coefficient(&s, &MultiIndex(vec![1]), &one).unwrap();
        assert!(((k1.matrix[(0, 0)] - k0.matrix[(0, 0)]) - c64(psi1.norm_sqr(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn laplacian_examples() {
        let l = 1.3;
        let lam = [l];
        for z in [c64(0.0, 0.0), c64(0.4, -0.7), c64(-1.2, 0.1)] {
            let g = jet_gaussian(l, z);
            let v = model_laplacian_apply(&lam, &g, &FormIndex::empty(), &[z]).unwrap();
            assert!(v.norm() < 1e-14);
            let v = model_laplacian_apply(&lam, &g, &FormIndex::new(vec![0]).unwrap(), &[z]).unwrap();
            assert!((v - g.value * (2.0 * l)).norm() < 1e-14);
            // f = z̄ g
            let e = g.value;
            let f = ScalarJet {
                value: z.conj() * e,
                dz: vec![z.conj() * g.dz[0]],
                dzbar: vec![e + z.conj() * g.dzbar[0]],
                dzdzbar: vec![g.dz[0] + z.conj() * g.dzdzbar[0]],
            };
            let v = model_laplacian_apply(&lam, &f, &FormIndex::empty(), &[z]).unwrap();
            assert!((v - f.value * (2.0 * l)).norm() < 1e-14);
        }
        let bad = ScalarJet { value: c64(1.0, 0.0), dz: vec![], dzbar: vec![], dzdzbar: vec![] };
        assert!(model_laplacian_apply(&lam, &bad, &FormIndex::empty(), &[c64(0.0, 0.0)]).is_err());
    }
}
