use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::form::{binomial, form_indices, FormIndex};
use crate::geometry::WeightModel;
use crate::model::ScalarJet;
use crate::{c64, C64};

use super::ladder::LadderOp;

/// `ψ_{p,r}(z)` for `p < rows`, `r < cols`, stored at `p * cols + r`.
///
/// `ψ_{0,0} = √(2μ/π) e^{-μ|z|²}`; `p` counts `ζ̄ = √(2μ) z̄` raisings
/// (Landau level) and `r` counts `ζ` raisings (the holomorphic direction).
/// The family is orthonormal in `L²(C, dm)`.
pub fn landau_table(mu: f64, rows: usize, cols: usize, z: C64) -> Vec<C64> {
    let s = libm::sqrt(2.0 * mu);
    let zeta = z * s;
    let mut t = vec![C64::default(); rows * cols];
    if rows == 0 || cols == 0 {
        return t;
    }
    t[0] = c64(libm::sqrt(2.0 * mu / PI) * libm::exp(-mu * z.norm_sqr()), 0.0);
    for r in 1..cols {
        t[r] = t[r - 1] * zeta / libm::sqrt(r as f64);
    }
    for p in 0..rows - 1 {
        for r in 0..cols {
            let mut v = t[p * cols + r] * zeta.conj();
            if r > 0 {
                v -= t[p * cols + r - 1] * libm::sqrt(r as f64);
            }
            t[(p + 1) * cols + r] = v / libm::sqrt(p as f64 + 1.0);
        }
    }
    t
}

/// Products of Landau functions times `dz̄^I`, truncated at `m` per ladder.
///
/// A scalar state is `[p_0, r_0, p_1, r_1, …]`; element indices are
/// `form_rank · m^{2n} + Σ s_j m^{2n-1-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorBasis {
    n: usize,
    q: usize,
    m: usize,
    mu: Vec<f64>,
    forms: Vec<FormIndex>,
}

impl OscillatorBasis {
    pub fn new(n: usize, q: usize, m: usize, mu: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(invalid("truncation must be at least 1"));
        }
        if mu.len() != n {
            return Err(invalid(format!("need {n} scales, got {}", mu.len())));
        }
        if let Some(s) = mu.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(invalid(format!("basis scale must be positive, got {s}")));
        }
        let states = m.checked_pow(2 * n as u32).ok_or_else(|| invalid("basis size overflows"))?;
        states.checked_mul(binomial(n, q.min(n))).ok_or_else(|| invalid("basis size overflows"))?;
        let forms = form_indices(n, q)?;
        Ok(OscillatorBasis { n, q, m, mu, forms })
    }

    /// Scales `|λ_i|`, matching the Gaussian envelope of the model zero modes;
    /// vanishing eigenvalues fall back to 1.
    pub fn for_weight(weight: &WeightModel, q: usize, m: usize) -> Result<Self> {
        let mu = weight.lambdas().iter().map(|l| if *l == 0.0 { 1.0 } else { l.abs() }).collect();
        Self::new(weight.dim(), q, m, mu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn truncation(&self) -> usize {
        self.m
    }

    pub fn scales(&self) -> &[f64] {
        &self.mu
    }

    pub fn forms(&self) -> &[FormIndex] {
        &self.forms
    }

    pub fn states(&self) -> usize {
        self.m.pow(2 * self.n as u32)
    }

    pub fn len(&self) -> usize {
        self.states() * self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same scales and truncation in another degree.
    pub fn with_degree(&self, q: usize) -> Result<Self> {
        Self::new(self.n, q, self.m, self.mu.clone())
    }

    pub fn with_truncation(&self, m: usize) -> Result<Self> {
        Self::new(self.n, self.q, m, self.mu.clone())
    }

    pub fn state_index(&self, s: &[u32]) -> Option<usize> {
        let mut idx = 0usize;
        for &v in s {
            if v as usize >= self.m {
                return None;
            }
            idx = idx * self.m + v as usize;
        }
        Some(idx)
    }

    pub fn state_of(&self, mut idx: usize) -> Vec<u32> {
        let mut s = vec![0u32; 2 * self.n];
        for v in s.iter_mut().rev() {
            *v = (idx % self.m) as u32;
            idx /= self.m;
        }
        s
    }

    pub fn index(&self, form: usize, state: usize) -> usize {
        form * self.states() + state
    }

    /// Positions of this basis' elements inside a basis of the same degree,
    /// scales and a truncation at least as large.
    pub fn embedding_into(&self, larger: &OscillatorBasis) -> Result<Vec<usize>> {
        if larger.n != self.n || larger.q != self.q || larger.mu != self.mu || larger.m < self.m {
            return Err(invalid("bases are not nested"));
        }
        let mut out = Vec::with_capacity(self.len());
        for f in 0..self.forms.len() {
            for s in 0..self.states() {
                let st = larger.state_index(&self.state_of(s)).expect("nested truncation");
                out.push(larger.index(f, st));
            }
        }
        Ok(out)
    }

    /// `ψ_s(z)` for every scalar state, in state-index order.
    pub fn scalar_values(&self, z: &[C64]) -> Result<Vec<C64>> {
        if z.len() != self.n {
            return Err(invalid("point dimension does not match the basis"));
        }
        let tables: Vec<Vec<C64>> = (0..self.n).map(|i| landau_table(self.mu[i], self.m, self.m, z[i])).collect();
        let mut out = vec![c64(1.0, 0.0)];
        for t in &tables {
            let mut next = Vec::with_capacity(out.len() * t.len());
            for a in &out {
                for b in t {
                    next.push(a * b);
                }
            }
            out = next;
        }
        Ok(out)
    }

    /// `ψ_s(z)` for an arbitrary state, without truncation.
    pub fn eval_state(&self, s: &[u32], z: &[C64]) -> C64 {
        (0..self.n)
            .map(|i| {
                let (p, r) = (s[2 * i] as usize, s[2 * i + 1] as usize);
                landau_table(self.mu[i], p + 1, r + 1, z[i])[p * (r + 1) + r]
            })
            .product()
    }

    fn eval_op(&self, op: &LadderOp, s: &[u32], z: &[C64]) -> C64 {
        op.apply(s).iter().map(|(t, c)| c * self.eval_state(t, z)).sum()
    }

    /// Exact derivatives of `ψ_s` through the ladder representation of `∂_z`, `∂_z̄`.
    pub fn scalar_jet(&self, s: &[u32], z: &[C64]) -> ScalarJet {
        let n = self.n;
        let dz: Vec<LadderOp> = (0..n).map(|i| LadderOp::dz(i, self.mu[i])).collect();
        let dzb: Vec<LadderOp> = (0..n).map(|i| LadderOp::dzbar(i, self.mu[i])).collect();
        ScalarJet {
            value: self.eval_state(s, z),
            dz: dz.iter().map(|o| self.eval_op(o, s, z)).collect(),
            dzbar: dzb.iter().map(|o| self.eval_op(o, s, z)).collect(),
            dzdzbar: (0..n).map(|i| self.eval_op(&dz[i].compose(&dzb[i]), s, z)).collect(),
        }
    }
}
