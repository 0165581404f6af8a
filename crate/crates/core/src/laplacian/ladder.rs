//! Operators on Landau states written as sums of words in the ladder letters
//! `a_i, a_i†` (Landau level of coordinate `i`) and `b_i, b_i†` (holomorphic
//! index). Every letter maps a basis state to a multiple of a single state,
//! so words act exactly.
//!
//! With `μ` the scale of coordinate `i`:
//! `z = (a + b†)/√(2μ)`, `z̄ = (a† + b)/√(2μ)`,
//! `∂_z̄ = √(μ/2)(a − b†)`, `∂_z = √(μ/2)(b − a†)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::poly::ZPoly;
use crate::{c64, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ladder {
    A,
    ADag,
    B,
    BDag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub coord: usize,
    pub op: Ladder,
}

impl Letter {
    fn act(self, s: &mut [u32]) -> Option<f64> {
        let slot = match self.op {
            Ladder::A | Ladder::ADag => 2 * self.coord,
            Ladder::B | Ladder::BDag => 2 * self.coord + 1,
        };
        let v = s[slot];
        match self.op {
            Ladder::A | Ladder::B => {
                if v == 0 {
                    return None;
                }
                s[slot] = v - 1;
                Some(libm::sqrt(v as f64))
            }
            Ladder::ADag | Ladder::BDag => {
                s[slot] = v + 1;
                Some(libm::sqrt(v as f64 + 1.0))
            }
        }
    }
}

/// `Σ c_w · w`, each word applied right to left.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LadderOp {
    terms: BTreeMap<Vec<Letter>, C64>,
}

impl LadderOp {
    pub fn zero() -> Self {
        LadderOp::default()
    }

    pub fn scalar(c: C64) -> Self {
        let mut t = BTreeMap::new();
        if c != C64::default() {
            t.insert(Vec::new(), c);
        }
        LadderOp { terms: t }
    }

    pub fn letter(coord: usize, op: Ladder, c: f64) -> Self {
        let mut t = BTreeMap::new();
        if c != 0.0 {
            t.insert(vec![Letter { coord, op }], c64(c, 0.0));
        }
        LadderOp { terms: t }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = (&Vec<Letter>, &C64)> {
        self.terms.iter()
    }

    /// Longest word; bounds how far any ladder index can be raised.
    pub fn max_len(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn add(&self, other: &LadderOp) -> LadderOp {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            *out.terms.entry(w.clone()).or_default() += c;
        }
        out.terms.retain(|_, c| *c != C64::default());
        out
    }

    pub fn scale(&self, s: C64) -> LadderOp {
        let mut out = LadderOp { terms: self.terms.iter().map(|(w, c)| (w.clone(), c * s)).collect() };
        out.terms.retain(|_, c| *c != C64::default());
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LadderOp) -> LadderOp {
        let mut out = LadderOp::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                *out.terms.entry(w).or_default() += c1 * c2;
            }
        }
        out.terms.retain(|_, c| *c != C64::default());
        out
    }

    pub fn z(i: usize, mu: f64) -> Self {
        let c = 1.0 / libm::sqrt(2.0 * mu);
        Self::letter(i, Ladder::A, c).add(&Self::letter(i, Ladder::BDag, c))
    }

    pub fn zbar(i: usize, mu: f64) -> Self {
        let c = 1.0 / libm::sqrt(2.0 * mu);
        Self::letter(i, Ladder::ADag, c).add(&Self::letter(i, Ladder::B, c))
    }

    pub fn dzbar(i: usize, mu: f64) -> Self {
        let c = libm::sqrt(mu / 2.0);
        Self::letter(i, Ladder::A, c).add(&Self::letter(i, Ladder::BDag, -c))
    }

    pub fn dz(i: usize, mu: f64) -> Self {
        let c = libm::sqrt(mu / 2.0);
        Self::letter(i, Ladder::B, c).add(&Self::letter(i, Ladder::ADag, -c))
    }

    /// Multiplication by a polynomial in `(z, z̄)`.
    pub fn poly(p: &ZPoly, mu: &[f64]) -> Self {
        let mut out = LadderOp::zero();
        for (m, c) in p.terms() {
            let mut term = LadderOp::scalar(*c);
            for (i, &mi) in mu.iter().enumerate() {
                for _ in 0..m.z[i] {
                    term = term.compose(&Self::z(i, mi));
                }
                for _ in 0..m.zbar[i] {
                    term = term.compose(&Self::zbar(i, mi));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Image of one state, as merged `(state, coefficient)` pairs.
    pub fn apply(&self, s: &[u32]) -> Vec<(Vec<u32>, C64)> {
        let mut out: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
        'words: for (w, c) in &self.terms {
            let mut t = s.to_vec();
            let mut f = 1.0;
            for l in w.iter().rev() {
                match l.act(&mut t) {
                    Some(v) => f *= v,
                    None => continue 'words,
                }
            }
            *out.entry(t).or_default() += c * f;
        }
        out.into_iter().filter(|(_, c)| *c != C64::default()).collect()
    }
}
