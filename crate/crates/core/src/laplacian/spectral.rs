use alloc::format;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::form::KernelValue;
use crate::numerics::{hermitian_eigh, SpectralData};
use crate::{c64, flat_volume_factor, C64};

use super::assemble::{AssembledOperator, OperatorKind};
use super::basis::OscillatorBasis;

/// Eigenvalues within `1e-9 · μ_max` above a threshold still count as below it.
pub const THRESHOLD_REL_TOL: f64 = 1e-9;

pub fn laplacian_spectrum(op: &AssembledOperator) -> Result<SpectralData> {
    if op.which != OperatorKind::Laplacian {
        return Err(invalid("spectrum requested for a non-Laplacian operator"));
    }
    hermitian_eigh(&op.matrix)
}

/// Eigenvectors with eigenvalue in `[0, c]`, ready for pointwise evaluation.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    basis: OscillatorBasis,
    /// `len × rank`
    vectors: DMatrix<C64>,
    threshold: f64,
}

impl SpectralKernel {
    pub fn new(spec: &SpectralData, basis: &OscillatorBasis, c: f64) -> Result<Self> {
        if spec.basis_dim() != basis.len() {
            return Err(invalid(format!("spectrum has dimension {}, basis {}", spec.basis_dim(), basis.len())));
        }
        if !(c >= 0.0) {
            return Err(invalid(format!("threshold must be nonnegative, got {c}")));
        }
        let tol = THRESHOLD_REL_TOL * spec.max_abs_eigenvalue();
        let idx = spec.indices_at_most(c, tol);
        Ok(SpectralKernel { basis: basis.clone(), vectors: spec.vectors.select_columns(idx.iter()), threshold: c })
    }

    pub fn rank(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `x[(I, i)]`: coefficient on `dz̄^I` of the `i`-th retained eigenvector at `z`.
    pub fn values_at(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        let psi = self.basis.scalar_values(z)?;
        let states = self.basis.states();
        let forms = self.basis.forms().len();
        let r = self.rank();
        let mut x = DMatrix::zeros(forms, r);
        for f in 0..forms {
            for i in 0..r {
                let mut acc = c64(0.0, 0.0);
                for (s, p) in psi.iter().enumerate() {
                    acc += self.vectors[(f * states + s, i)] * p;
                }
                x[(f, i)] = acc;
            }
        }
        Ok(x)
    }

    /// Kernel from [`SpectralKernel::values_at`] at `z` and `w`, against `dV = 2^n dm`.
    pub fn eval_from_values(&self, xz: &DMatrix<C64>, xw: &DMatrix<C64>) -> KernelValue {
        let n = self.basis.dim();
        let matrix = (xz * xw.adjoint()) * c64(1.0 / flat_volume_factor(n), 0.0);
        KernelValue { n, q: self.basis.degree(), matrix }
    }

    pub fn eval(&self, z: &[C64], w: &[C64]) -> Result<KernelValue> {
        Ok(self.eval_from_values(&self.values_at(z)?, &self.values_at(w)?))
    }
}

/// `Σ_{μ_i ≤ c} u_i(z) ⊗ conj(u_i(w))`.
pub fn spectral_projection_kernel(spec: &SpectralData, basis: &OscillatorBasis, c: f64, z: &[C64], w: &[C64]) -> Result<KernelValue> {
    SpectralKernel::new(spec, basis, c)?.eval(z, w)
}

/// `(kernel_dim, gap)` with the kernel taken as `μ ≤ zero_tol · μ_max`.
pub fn spectral_gap(spec: &SpectralData, zero_tol: f64) -> Result<(usize, f64)> {
    let cut = zero_tol * spec.max_abs_eigenvalue();
    let kernel_dim = spec.eigenvalues.iter().filter(|m| **m <= cut).count();
    let gap = spec.eigenvalues.iter().copied().find(|m| *m > cut).ok_or(Error::DegenerateSpectrum)?;
    Ok((kernel_dim, gap))
}
