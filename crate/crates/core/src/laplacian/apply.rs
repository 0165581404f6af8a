use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::form::{form_indices, form_rank, FormValue};
use crate::geometry::WeightModel;
use crate::model::ScalarJet;
use crate::{c64, C64};

/// Pointwise `□ u` for the weight `k φ` and the flat metric, from jets of the
/// components of `u = Σ u_I dz̄^I` listed in lexicographic order:
///
/// `□ = Σ_j A_j† A_j + 2 Σ_{j,l} φ_{z_l z̄_j} dz̄^j ∧ ι_l`,
/// with `A_j = ∂_{z̄_j} + φ_{z̄_j}` and `A_j† = −∂_{z_j} + φ_{z_j}`.
pub fn localized_laplacian_apply(weight: &WeightModel, k: f64, u: &[ScalarJet], q: usize, z: &[C64]) -> Result<FormValue> {
    let n = weight.dim();
    let forms = form_indices(n, q)?;
    if u.len() != forms.len() {
        return Err(invalid("one jet per form index is required"));
    }
    if u.iter().any(|j| j.dz.len() != n || j.dzbar.len() != n || j.dzdzbar.len() != n) {
        return Err(invalid("jet does not carry all derivatives"));
    }
    let phi = weight.eval(z, k)?;
    let mut out: Vec<C64> = Vec::with_capacity(forms.len());
    for f in u {
        let mut v = c64(0.0, 0.0);
        for j in 0..n {
            v += -f.dzdzbar[j] - phi.hessian[(j, j)] * f.value - phi.dzbar[j] * f.dz[j]
                + phi.dz[j] * f.dzbar[j]
                + f.value * phi.dzbar[j].norm_sqr();
        }
        out.push(v);
    }
    for (fi, form) in forms.iter().enumerate() {
        for &l in form.as_slice() {
            let (s1, rest) = form.remove(l).expect("index present");
            for j in 0..n {
                if let Some((s2, target)) = rest.insert(j) {
                    out[form_rank(&target, n)] += phi.hessian[(l, j)] * (2.0 * s1 * s2) * u[fi].value;
                }
            }
        }
    }
    FormValue::from_coeffs(n, q, out)
}
