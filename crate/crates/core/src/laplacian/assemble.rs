use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::form::form_rank;
use crate::geometry::WeightModel;
use crate::{c64, C64};

use super::basis::OscillatorBasis;
use super::ladder::{Ladder, LadderOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Dbar,
    DbarAdjoint,
    Laplacian,
}

/// A Galerkin matrix from `source` into `target`; for the Laplacian both agree.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub matrix: DMatrix<C64>,
    pub source: OscillatorBasis,
    pub target: OscillatorBasis,
    pub k: f64,
    /// the scaled weight `φ_(k)` the operator was built from
    pub weight: WeightModel,
    pub which: OperatorKind,
    entries: Vec<(usize, usize, C64)>,
}

impl AssembledOperator {
    /// Nonzero entries `(row, col, value)`.
    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }
}

/// `∂̄_s` and its formal adjoint per coordinate, for the scaled weight:
/// `D_i = ∂_{z̄_i} + ∂φ/∂z̄_i`, `D_i† = −∂_{z_i} + ∂φ/∂z_i`.
pub struct Factors {
    pub d: Vec<LadderOp>,
    pub d_adj: Vec<LadderOp>,
    pub pad: usize,
}

pub fn factors(weight: &WeightModel, mu: &[f64]) -> Factors {
    let p = weight.perturbation();
    let mut d = Vec::new();
    let mut d_adj = Vec::new();
    for (i, (&l, &m)) in weight.lambdas().iter().zip(mu).enumerate() {
        let s = libm::sqrt(2.0 * m);
        let (up, down) = ((m + l) / s, (l - m) / s);
        let lin = LadderOp::letter(i, Ladder::A, up).add(&LadderOp::letter(i, Ladder::BDag, down));
        d.push(lin.add(&LadderOp::poly(&p.d_zbar(i), mu)));
        let lin = LadderOp::letter(i, Ladder::ADag, up).add(&LadderOp::letter(i, Ladder::B, down));
        d_adj.push(lin.add(&LadderOp::poly(&p.d_z(i), mu)));
    }
    let pad = d.iter().chain(&d_adj).map(LadderOp::max_len).max().unwrap_or(1).max(1);
    Factors { d, d_adj, pad }
}

fn to_dense(rows: usize, cols: usize, acc: BTreeMap<(usize, usize), C64>) -> (DMatrix<C64>, Vec<(usize, usize, C64)>) {
    let mut m = DMatrix::zeros(rows, cols);
    let mut entries = Vec::with_capacity(acc.len());
    for ((r, c), v) in acc {
        if v != C64::default() {
            m[(r, c)] = v;
            entries.push((r, c, v));
        }
    }
    (m, entries)
}

fn check_flat_weight(basis: &OscillatorBasis, weight: &WeightModel, k: f64) -> Result<WeightModel> {
    if weight.dim() != basis.dim() {
        return Err(invalid("weight and basis dimensions differ"));
    }
    weight.scaled(k)
}

/// `∂̄_s = ∂̄ + (∂̄φ_(k))∧` from degree `q` into degree `q + 1`.
///
/// The target basis is truncated at `m + pad`, large enough to hold the image
/// exactly, so the matrix is the restriction of the operator itself.
pub fn assemble_dbar(basis: &OscillatorBasis, weight: &WeightModel, k: f64) -> Result<AssembledOperator> {
    let n = basis.dim();
    let q = basis.degree();
    if q >= n {
        return Err(Error::DegreeOverflow { degree: q + 1, n });
    }
    let w = check_flat_weight(basis, weight, k)?;
    let f = factors(&w, basis.scales());
    let target = basis.with_degree(q + 1)?.with_truncation(basis.truncation() + f.pad)?;
    let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for (fi, form) in basis.forms().iter().enumerate() {
        for s in 0..basis.states() {
            let col = basis.index(fi, s);
            let state = basis.state_of(s);
            for i in 0..n {
                let Some((sign, j)) = form.insert(i) else { continue };
                let jr = form_rank(&j, n);
                for (t, c) in f.d[i].apply(&state) {
                    let ts = target.state_index(&t).ok_or_else(|| invalid("target truncation too small"))?;
                    *acc.entry((target.index(jr, ts), col)).or_default() += c * sign;
                }
            }
        }
    }
    let (matrix, entries) = to_dense(target.len(), basis.len(), acc);
    Ok(AssembledOperator { matrix, source: basis.clone(), target, k, weight: w, which: OperatorKind::Dbar, entries })
}

/// `∂̄_s* = Σ_i D_i† ι_i` from degree `q` into degree `q − 1`; the zero map
/// (no rows) for `q = 0`.
pub fn assemble_dbar_adjoint(basis: &OscillatorBasis, weight: &WeightModel, k: f64) -> Result<AssembledOperator> {
    let n = basis.dim();
    let q = basis.degree();
    let w = check_flat_weight(basis, weight, k)?;
    let f = factors(&w, basis.scales());
    if q == 0 {
        return Ok(AssembledOperator {
            matrix: DMatrix::zeros(0, basis.len()),
            source: basis.clone(),
            target: basis.clone(),
            k,
            weight: w,
            which: OperatorKind::DbarAdjoint,
            entries: Vec::new(),
        });
    }
    let target = basis.with_degree(q - 1)?.with_truncation(basis.truncation() + f.pad)?;
    let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for (fi, form) in basis.forms().iter().enumerate() {
        for s in 0..basis.states() {
            let col = basis.index(fi, s);
            let state = basis.state_of(s);
            for &i in form.as_slice() {
                let (sign, j) = form.remove(i).expect("index present");
                let jr = form_rank(&j, n);
                for (t, c) in f.d_adj[i].apply(&state) {
                    let ts = target.state_index(&t).ok_or_else(|| invalid("target truncation too small"))?;
                    *acc.entry((target.index(jr, ts), col)).or_default() += c * sign;
                }
            }
        }
    }
    let (matrix, entries) = to_dense(target.len(), basis.len(), acc);
    Ok(AssembledOperator { matrix, source: basis.clone(), target, k, weight: w, which: OperatorKind::DbarAdjoint, entries })
}

/// `X* X` accumulated row by row from sparse entries.
fn normal_product(op: &AssembledOperator, out: &mut DMatrix<C64>) {
    let mut rows: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
    for &(r, c, v) in &op.entries {
        rows.entry(r).or_default().push((c, v));
    }
    for row in rows.values() {
        for &(c1, v1) in row {
            let v1c = v1.conj();
            for &(c2, v2) in row {
                out[(c1, c2)] += v1c * v2;
            }
        }
    }
}

/// `□ = ∂̄_s* ∂̄_s + ∂̄_s ∂̄_s*` from the two assembled factors on the same basis.
pub fn compose_laplacian(dbar: Option<&AssembledOperator>, dbar_adjoint: &AssembledOperator) -> Result<AssembledOperator> {
    let basis = &dbar_adjoint.source;
    if dbar_adjoint.which != OperatorKind::DbarAdjoint {
        return Err(invalid("second factor must be the adjoint operator"));
    }
    match dbar {
        Some(d) => {
            if d.which != OperatorKind::Dbar || d.source != *basis || d.k != dbar_adjoint.k {
                return Err(invalid("factors are built on different bases"));
            }
        }
        None if basis.degree() < basis.dim() => {
            return Err(invalid(format!("degree {} needs the forward factor", basis.degree())));
        }
        None => {}
    }
    let len = basis.len();
    let mut a = DMatrix::zeros(len, len);
    if let Some(d) = dbar {
        normal_product(d, &mut a);
    }
    normal_product(dbar_adjoint, &mut a);
    let a = (&a + a.adjoint()) * c64(0.5, 0.0);
    let mut entries = Vec::new();
    for c in 0..len {
        for r in 0..len {
            if a[(r, c)] != C64::default() {
                entries.push((r, c, a[(r, c)]));
            }
        }
    }
    Ok(AssembledOperator {
        matrix: a,
        source: basis.clone(),
        target: basis.clone(),
        k: dbar_adjoint.k,
        weight: dbar_adjoint.weight.clone(),
        which: OperatorKind::Laplacian,
        entries,
    })
}

/// The scaled localized Kodaira Laplacian `□_(k),s` on the basis' degree.
pub fn assemble_laplacian(basis: &OscillatorBasis, weight: &WeightModel, k: f64) -> Result<AssembledOperator> {
    let d = if basis.degree() < basis.dim() { Some(assemble_dbar(basis, weight, k)?) } else { None };
    let e = assemble_dbar_adjoint(basis, weight, k)?;
    compose_laplacian(d.as_ref(), &e)
}
