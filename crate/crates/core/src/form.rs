//! Multi-indices and `(0,q)`-form coefficient algebra.
//!
//! A `(0,q)`-form at a point is stored densely over the frame
//! `{dz̄^I : I ∈ J_{q,n}}` enumerated in lexicographic order. The pointwise
//! Hermitian structure induced by a metric `h` on `T^{(1,0)}` is
//!
//! ```text
//! <dz̄^I | dz̄^J>_h = conj(det[(h^{-1})_{i_l, j_m}])
//! ```
//!
//! i.e. the determinant convention with no `1/q!` factor, so the frame is
//! orthonormal for the flat metric.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::C64;

/// Exponent vector `α ∈ N_0^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α| = Σ α_i`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α! = Π α_i!`, accumulated in floating point.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (2..=a).fold(1.0, |acc, j| acc * j as f64))
            .product()
    }

    /// `ln α!`, usable far beyond the range where `α!` fits a double.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&a| ln_factorial(a)).sum()
    }

    /// All `α` with `|α| <= max_degree`, graded then lexicographically
    /// descending in the leading coordinate (`(1,0)` before `(0,1)`).
    pub fn all_up_to(n: usize, max_degree: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for d in 0..=max_degree {
            let mut cur = vec![0u32; n];
            push_compositions(&mut out, &mut cur, 0, d);
        }
        out
    }
}

fn push_compositions(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, rest: u32) {
    let n = cur.len();
    if n == 0 {
        if rest == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for a in (0..=rest).rev() {
        cur[pos] = a;
        push_compositions(out, cur, pos + 1, rest - a);
    }
    cur[pos] = 0;
}

pub(crate) fn ln_factorial(a: u32) -> f64 {
    (2..=a).map(|j| libm::log(j as f64)).sum()
}

/// Strictly increasing tuple `(i_1 < ... < i_q)`; stored 0-based, displayed
/// 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormIndex(Vec<usize>);

impl FormIndex {
    /// Builds an index from 0-based entries.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!("form index {indices:?} is not strictly increasing")));
        }
        Ok(FormIndex(indices))
    }

    /// Builds an index from the 1-based entries used in serialized output.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(invalid("1-based form index contains 0"));
        }
        Self::new(indices.iter().map(|i| i - 1).collect())
    }

    pub fn empty() -> Self {
        FormIndex(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    /// `dz̄^i ∧ dz̄^I = sign · dz̄^{I ∪ {i}}`, or `None` when `i ∈ I`.
    pub fn insert(&self, i: usize) -> Option<(f64, FormIndex)> {
        match self.0.binary_search(&i) {
            Ok(_) => None,
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, i);
                Some((parity(pos), FormIndex(v)))
            }
        }
    }

    /// Flat interior product `ι_i dz̄^I = sign · dz̄^{I \ {i}}`, or `None`
    /// when `i ∉ I`. The sign matches [`FormIndex::insert`], so the flat
    /// contraction is the transpose of the wedge.
    pub fn remove(&self, i: usize) -> Option<(f64, FormIndex)> {
        match self.0.binary_search(&i) {
            Err(_) => None,
            Ok(pos) => {
                let mut v = self.0.clone();
                v.remove(pos);
                Some((parity(pos), FormIndex(v)))
            }
        }
    }
}

fn parity(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl fmt::Display for FormIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str(")")
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, j| acc * (n - j) / (j + 1))
}

/// `J_{q,n}` in lexicographic order.
pub fn form_indices(n: usize, q: usize) -> Result<Vec<FormIndex>> {
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if q > n {
        return Err(Error::DegreeOverflow { degree: q, n });
    }
    let mut out = Vec::with_capacity(binomial(n, q));
    let mut cur = Vec::with_capacity(q);
    push_subsets(&mut out, &mut cur, 0, n, q);
    Ok(out)
}

fn push_subsets(out: &mut Vec<FormIndex>, cur: &mut Vec<usize>, start: usize, n: usize, q: usize) {
    if cur.len() == q {
        out.push(FormIndex(cur.clone()));
        return;
    }
    let need = q - cur.len();
    for i in start..=(n - need) {
        cur.push(i);
        push_subsets(out, cur, i + 1, n, q);
        cur.pop();
    }
}

/// Position of `idx` within [`form_indices`]`(n, idx.degree())`.
pub fn form_rank(idx: &FormIndex, n: usize) -> usize {
    // Lexicographic rank of a q-subset of {0..n}.
    let q = idx.degree();
    let mut rank = 0;
    let mut prev = 0;
    for (pos, &i) in idx.0.iter().enumerate() {
        for skipped in prev..i {
            rank += binomial(n - skipped - 1, q - pos - 1);
        }
        prev = i + 1;
    }
    rank
}

/// Pointwise value of a `(0,q)`-form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    n: usize,
    degree: usize,
    coeffs: Vec<C64>,
}

impl FormValue {
    pub fn zero(n: usize, degree: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if degree > n {
            return Err(Error::DegreeOverflow { degree, n });
        }
        Ok(FormValue { n, degree, coeffs: vec![C64::new(0.0, 0.0); binomial(n, degree)] })
    }

    pub fn from_coeffs(n: usize, degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        let mut v = Self::zero(n, degree)?;
        if coeffs.len() != v.coeffs.len() {
            return Err(invalid(format!(
                "expected {} coefficients for degree {degree} in dimension {n}, got {}",
                v.coeffs.len(),
                coeffs.len()
            )));
        }
        v.coeffs = coeffs;
        Ok(v)
    }

    /// `coeff · dz̄^I`.
    pub fn basis(n: usize, idx: &FormIndex, coeff: C64) -> Result<Self> {
        if idx.as_slice().iter().any(|&i| i >= n) {
            return Err(invalid(format!("form index {idx} out of range for n = {n}")));
        }
        let mut v = Self::zero(n, idx.degree())?;
        v.coeffs[form_rank(idx, n)] = coeff;
        Ok(v)
    }

    /// The `(0,1)`-form `Σ c_i dz̄^i`.
    pub fn one_form(coeffs: &[C64]) -> Result<Self> {
        Self::from_coeffs(coeffs.len(), 1, coeffs.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, idx: &FormIndex) -> C64 {
        self.coeffs[form_rank(idx, self.n)]
    }

    pub fn scale(&self, s: C64) -> Self {
        FormValue { coeffs: self.coeffs.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &FormValue) -> Result<Self> {
        self.check_same(other)?;
        Ok(FormValue {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub fn max_abs_diff(&self, other: &FormValue) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    fn check_same(&self, other: &FormValue) -> Result<()> {
        if self.n != other.n || self.degree != other.degree {
            return Err(invalid(format!(
                "form shapes differ: (n={}, q={}) vs (n={}, q={})",
                self.n, self.degree, other.n, other.degree
            )));
        }
        Ok(())
    }
}

/// Matrix of `η ∧ ·` from degree `q` to `q + 1` in the lexicographic frames.
pub fn wedge_matrix(eta: &[C64], q: usize) -> Result<DMatrix<C64>> {
    let n = eta.len();
    if q + 1 > n {
        return Err(Error::DegreeOverflow { degree: q + 1, n });
    }
    let src = form_indices(n, q)?;
    let mut w = DMatrix::zeros(binomial(n, q + 1), src.len());
    for (col, idx) in src.iter().enumerate() {
        for (i, &e) in eta.iter().enumerate() {
            if let Some((sign, up)) = idx.insert(i) {
                w[(form_rank(&up, n), col)] += e * sign;
            }
        }
    }
    Ok(w)
}

/// `η ∧ u` for a `(0,1)`-form `η`.
pub fn wedge(eta: &FormValue, u: &FormValue) -> Result<FormValue> {
    if eta.degree != 1 {
        return Err(invalid("wedge expects a (0,1)-form on the left"));
    }
    if eta.n != u.n {
        return Err(invalid("wedge operands live in different dimensions"));
    }
    let w = wedge_matrix(&eta.coeffs, u.degree)?;
    let out = &w * nalgebra::DVector::from_column_slice(&u.coeffs);
    FormValue::from_coeffs(u.n, u.degree + 1, out.as_slice().to_vec())
}

/// Checks that `h` is Hermitian positive definite and returns `h^{-1}`.
pub fn metric_inverse(h: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::InvalidMetric(format!("metric must be square, got {}x{}", n, h.ncols())));
    }
    if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidMetric("non-finite entry".into()));
    }
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let asym = (h - h.adjoint()).norm();
    if asym > 1e-12 * scale {
        return Err(Error::InvalidMetric(format!("not Hermitian (|h - h*| = {asym:e})")));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    if !is_positive_definite(&sym) {
        return Err(Error::InvalidMetric("not positive definite".into()));
    }
    let chol = nalgebra::Cholesky::new(sym)
        .ok_or_else(|| Error::InvalidMetric("not positive definite".into()))?;
    Ok(chol.inverse())
}

/// Smallest eigenvalue of the Hermitian part is positive.
pub(crate) fn is_positive_definite(h: &DMatrix<C64>) -> bool {
    let sym = (h + h.adjoint()).scale(0.5);
    sym.symmetric_eigenvalues().iter().all(|e| *e > 0.0)
}

/// Gram matrix `G_{IJ} = <dz̄^I | dz̄^J>_h` of the degree-`q` frame.
pub fn frame_gram(h: &DMatrix<C64>, q: usize) -> Result<DMatrix<C64>> {
    let n = h.nrows();
    let hinv = metric_inverse(h)?;
    let idx = form_indices(n, q)?;
    let m = idx.len();
    let mut g = DMatrix::zeros(m, m);
    for (a, ia) in idx.iter().enumerate() {
        for (b, ib) in idx.iter().enumerate() {
            let sub = DMatrix::from_fn(q, q, |l, k| hinv[(ia.0[l], ib.0[k])]);
            g[(a, b)] = sub.determinant().conj();
        }
    }
    Ok(g)
}

/// `<u | v>_h`, linear in `u`.
pub fn pointwise_inner(u: &FormValue, v: &FormValue, h: &DMatrix<C64>) -> Result<C64> {
    u.check_same(v)?;
    if h.nrows() != u.n {
        return Err(Error::InvalidMetric(format!("metric is {}x{}, forms live in dimension {}", h.nrows(), h.ncols(), u.n)));
    }
    let g = frame_gram(h, u.degree)?;
    let mut acc = C64::new(0.0, 0.0);
    for (a, ua) in u.coeffs.iter().enumerate() {
        for (b, vb) in v.coeffs.iter().enumerate() {
            acc += ua * vb.conj() * g[(a, b)];
        }
    }
    Ok(acc)
}

/// `η ∧^* u`: the pointwise adjoint of `η ∧ ·` under `h`, lowering degree by
/// one. Antilinear in `η`.
pub fn contract(eta: &FormValue, u: &FormValue, h: &DMatrix<C64>) -> Result<FormValue> {
    if eta.degree != 1 {
        return Err(invalid("contract expects a (0,1)-form as the contracting form"));
    }
    if eta.n != u.n || h.nrows() != u.n {
        return Err(invalid("contract operands live in different dimensions"));
    }
    if u.degree == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let q = u.degree;
    let w = wedge_matrix(&eta.coeffs, q - 1)?;
    let g_hi = frame_gram(h, q)?;
    let g_lo = frame_gram(h, q - 1)?;
    // <η∧v|u> = <v|x>  ⇔  conj(G_lo) x = W^* conj(G_hi) u
    let rhs = w.adjoint() * g_hi.map(|c| c.conj()) * nalgebra::DVector::from_column_slice(&u.coeffs);
    let lhs = g_lo.map(|c| c.conj());
    let x = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidMetric("singular frame Gram matrix".into()))?;
    FormValue::from_coeffs(u.n, q - 1, x.as_slice().to_vec())
}

/// Flat-metric contraction, `ι_η u = Σ_i conj(η_i) ι_i u`.
pub fn contract_flat(eta: &[C64], u: &FormValue) -> Result<FormValue> {
    if eta.len() != u.n {
        return Err(invalid("contract operands live in different dimensions"));
    }
    if u.degree == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let n = u.n;
    let mut out = FormValue::zero(n, u.degree - 1)?;
    for (col, idx) in form_indices(n, u.degree - 1)?.iter().enumerate() {
        for (i, e) in eta.iter().enumerate() {
            if let Some((sign, up)) = idx.insert(i) {
                out.coeffs[col] += e.conj() * u.coeffs[form_rank(&up, n)] * sign;
            }
        }
    }
    Ok(out)
}

/// Pointwise value of a kernel section: a linear map from degree-`q` forms
/// at `w` to degree-`q` forms at `z`. Rows are indexed by the `z`-side
/// `I`, columns by the `w`-side `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue {
    pub n: usize,
    pub q: usize,
    pub matrix: DMatrix<C64>,
}

impl KernelValue {
    pub fn zero(n: usize, q: usize) -> Result<Self> {
        if q > n {
            return Err(Error::DegreeOverflow { degree: q, n });
        }
        let m = binomial(n, q);
        Ok(KernelValue { n, q, matrix: DMatrix::zeros(m, m) })
    }

    pub fn entry(&self, i: &FormIndex, j: &FormIndex) -> C64 {
        self.matrix[(form_rank(i, self.n), form_rank(j, self.n))]
    }

    pub fn apply(&self, u: &FormValue) -> Result<FormValue> {
        if u.n != self.n || u.degree != self.q {
            return Err(invalid("kernel and form have different shapes"));
        }
        let out = &self.matrix * nalgebra::DVector::from_column_slice(&u.coeffs);
        FormValue::from_coeffs(self.n, self.q, out.as_slice().to_vec())
    }

    /// Kernel value with the roles of `z` and `w` exchanged.
    pub fn adjoint(&self) -> Self {
        KernelValue { n: self.n, q: self.q, matrix: self.matrix.adjoint() }
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &KernelValue) -> f64 {
        self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}
