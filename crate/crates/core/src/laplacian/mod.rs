//! Galerkin discretization of the scaled localized Kodaira Laplacian
//! `□_(k),s = ∂̄_s* ∂̄_s + ∂̄_s ∂̄_s*` for the flat metric and a polynomial weight.
//!
//! Functions are expanded in products of Landau functions. Both `∂̄_s` and its
//! adjoint shift every ladder index by a bounded amount, so each factor is
//! assembled exactly into a slightly larger target space and the Laplacian
//! matrix is the exact Rayleigh–Ritz matrix on the truncated space.
//!
//! Basis functions are orthonormal in `L²(dm)`; kernels are reported against
//! `dV = 2^n dm`.

mod apply;
mod assemble;
mod basis;
pub mod ladder;
mod spectral;

pub use apply::localized_laplacian_apply;
pub use assemble::{
    assemble_dbar, assemble_dbar_adjoint, assemble_laplacian, compose_laplacian, factors, AssembledOperator, Factors,
    OperatorKind,
};
pub use basis::{landau_table, OscillatorBasis};
pub use spectral::{
    laplacian_spectrum, spectral_gap, spectral_projection_kernel, SpectralKernel, THRESHOLD_REL_TOL,
};

pub const DEFAULT_TRUNCATION: [usize; 2] = [24, 5];
