//! Weighted Bergman and spectral kernels for `(0,q)`-forms on `C^n`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pipeline: form algebra, weight/metric models, the closed-form model case,
//! quadrature and dense Hermitian linear algebra, finite-`k` Gram projectors
//! for functions, and Galerkin discretizations of the localized Kodaira
//! Laplacian. File formats, configuration and the experiment driver live in
//! the `bergman-lab` crate.
//!
//! Conventions used throughout:
//!
//! * Coordinates are 0-based in code and 1-based whenever a [`FormIndex`] is
//!   displayed or serialized.
//! * Inner products are linear in the first slot.
//! * The flat volume form is `dV = 2^n dm` ([`VOLUME_FACTOR_PER_DIM`]).
//! * A weight `phi` enters the line-bundle metric as `|s|^2 = e^{-2 phi}`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod fock;
pub mod form;
pub mod geometry;
pub mod laplacian;
pub mod model;
pub mod numerics;
pub mod poly;

pub use error::{Error, Result};
pub use form::{FormIndex, FormValue, KernelValue, MultiIndex};
pub use num_complex::Complex64;

/// Ratio between the flat Hermitian volume `omega_0^n / n!` and Lebesgue
/// measure, per complex dimension.
pub const VOLUME_FACTOR_PER_DIM: f64 = 2.0;

/// `dV_{omega_0} / dm` on `C^n`.
pub fn flat_volume_factor(n: usize) -> f64 {
    libm::pow(VOLUME_FACTOR_PER_DIM, n as f64)
}

pub(crate) type C64 = Complex64;

pub(crate) const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
