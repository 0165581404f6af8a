//! Polynomials in `(z, z̄)` on `C^n` with complex coefficients.
//!
//! Weight perturbations and metric perturbations are expressed with these, so
//! every derivative the pipelines need is exact.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::{c64, C64};

/// `z^a z̄^b` with `a, b ∈ N_0^n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub z: Vec<u32>,
    pub zbar: Vec<u32>,
}

impl Monomial {
    pub fn new(z: Vec<u32>, zbar: Vec<u32>) -> Result<Self> {
        if z.len() != zbar.len() {
            return Err(invalid("z and z̄ exponent vectors differ in length"));
        }
        Ok(Monomial { z, zbar })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn degree(&self) -> u32 {
        self.z.iter().chain(&self.zbar).sum()
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        let mut acc = c64(1.0, 0.0);
        for (i, zi) in z.iter().enumerate() {
            acc *= zi.powu(self.z[i]) * zi.conj().powu(self.zbar[i]);
        }
        acc
    }

    fn conj(&self) -> Self {
        Monomial { z: self.zbar.clone(), zbar: self.z.clone() }
    }
}

/// `Σ c_m m(z, z̄)`; like terms are merged and zero terms dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZPoly {
    n: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl ZPoly {
    pub fn zero(n: usize) -> Self {
        ZPoly { n, terms: BTreeMap::new() }
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, C64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (m, c) in terms {
            if m.dim() != n {
                return Err(invalid("monomial dimension does not match polynomial dimension"));
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Real-valued polynomial `Σ c · Re(z^a z̄^b)` from real coefficients.
    pub fn real_from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (m, c) in terms {
            if m.dim() != n {
                return Err(invalid("monomial dimension does not match polynomial dimension"));
            }
            let conj = m.conj();
            p.add_term(m, c64(0.5 * c, 0.0));
            p.add_term(conj, c64(0.5 * c, 0.0));
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: C64) {
        let e = self.terms.entry(m).or_insert(c64(0.0, 0.0));
        *e += c;
        self.terms.retain(|_, c| *c != c64(0.0, 0.0));
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms.iter().map(|(m, c)| c * m.eval(z)).sum()
    }

    /// Lowest total degree among the terms; `None` for the zero polynomial.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Homogeneous part of the given total degree.
    pub fn homogeneous_part(&self, degree: u32) -> ZPoly {
        ZPoly {
            n: self.n,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == degree).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    pub fn conj(&self) -> ZPoly {
        ZPoly { n: self.n, terms: self.terms.iter().map(|(m, c)| (m.conj(), c.conj())).collect() }
    }

    /// True when the polynomial takes real values everywhere.
    pub fn is_real(&self, tol: f64) -> bool {
        let c = self.conj();
        let keys = self.terms.keys().chain(c.terms.keys());
        keys.into_iter().all(|m| {
            let a = self.terms.get(m).copied().unwrap_or_default();
            let b = c.terms.get(m).copied().unwrap_or_default();
            (a - b).norm() <= tol * (1.0 + a.norm())
        })
    }

    pub fn scale(&self, s: C64) -> ZPoly {
        ZPoly { n: self.n, terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).filter(|(_, c)| *c != C64::default()).collect() }
    }

    /// `p(s·z)` for a real dilation `s`.
    pub fn dilate(&self, s: f64) -> ZPoly {
        ZPoly {
            n: self.n,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * libm::pow(s, m.degree() as f64))).collect(),
        }
    }

    pub fn add(&self, other: &ZPoly) -> ZPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    /// `∂p/∂z_i`.
    pub fn d_z(&self, i: usize) -> ZPoly {
        self.derive(i, false)
    }

    /// `∂p/∂z̄_i`.
    pub fn d_zbar(&self, i: usize) -> ZPoly {
        self.derive(i, true)
    }

    fn derive(&self, i: usize, bar: bool) -> ZPoly {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            let e = if bar { m.zbar[i] } else { m.z[i] };
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            if bar {
                dm.zbar[i] -= 1;
            } else {
                dm.z[i] -= 1;
            }
            out.add_term(dm, c * e as f64);
        }
        out
    }
}

/// The monomial `|z_i|^{2p}` in dimension `n`.
pub fn abs_power(n: usize, i: usize, p: u32) -> Monomial {
    let mut z = vec![0; n];
    let mut zb = vec![0; n];
    z[i] = p;
    zb[i] = p;
    Monomial { z, zbar: zb }
}
