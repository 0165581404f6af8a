//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Tolerances and runtime limits are fixed below.

use std::time::{Duration, Instant};

use bergman_core::fock::ball_grid;
use bergman_core::form::{contract, form_indices, form_rank, pointwise_inner, wedge, FormValue};
use bergman_core::geometry::WeightModel;
use bergman_core::laplacian::{
    assemble_dbar, assemble_laplacian, laplacian_spectrum, localized_laplacian_apply, spectral_gap, OscillatorBasis,
    SpectralKernel,
};
use bergman_core::model::{
    model_basis_coefficient, model_basis_coefficients, model_kernel, model_laplacian_apply, series_from_coefficients,
    ModelSpec, ScalarJet,
};
use bergman_core::numerics::tensor_gauss_rule;
use bergman_core::poly::{abs_power, ZPoly};
use bergman_core::{Complex64, FormIndex, MultiIndex};
use bergman_lab::harness::{convergence_scan, cross_path_distance, Convergence};
use bergman_lab::output::write_kernel_grid;
use bergman_lab::ExperimentConfig;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};

const ONE_OVER_PI: f64 = 0.318_309_886_183_790_7;
const LAMBDA_SETS: [&[f64]; 4] = [&[1.0], &[-1.0], &[1.0, 3.0], &[-1.0, 3.0]];

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.norm()))
}

fn cfg(src: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(src).expect("valid config")
}

fn scan(src: &str) -> Result<Convergence, String> {
    convergence_scan(&cfg(src)).map_err(|e| e.to_string())
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const QUARTIC: &str = "[weight]\nlambdas = [1.0]\nterms = [{ z = [2], zbar = [2], coeff = 0.05 }]\n";

fn closed_form_vs_series() -> Outcome {
    let mut worst = 0.0f64;
    for l in LAMBDA_SETS {
        let spec = ModelSpec::new(l).unwrap();
        let pts = ball_grid(l.len(), 1.5, 5);
        let coef: Vec<Vec<Complex64>> = pts.iter().map(|z| model_basis_coefficients(&spec, z, 40).unwrap()).collect();
        for (i, z) in pts.iter().enumerate() {
            for (j, w) in pts.iter().enumerate() {
                let s = series_from_coefficients(&spec, &coef[i], &coef[j]);
                worst = worst.max(s.max_abs_diff(&model_kernel(&spec, z, w).unwrap()));
            }
        }
    }
    ensure(worst <= 1e-8, format!("sup |closed form − series(N=40)| = {worst:.2e} (≤ 1e-8)"))
}

/// 25 deterministic points on a spiral inside the ball of radius 0.9.
fn sample_points(n: usize) -> Vec<Vec<Complex64>> {
    (0..25)
        .map(|j| {
            let r = 0.9 * ((j as f64 + 0.5) / 25.0).sqrt();
            let t = 2.399_963 * j as f64;
            let z = Complex64::from_polar(r, t);
            if n == 1 {
                vec![z]
            } else {
                vec![z * (0.5f64).sqrt(), Complex64::from_polar(r * (0.5f64).sqrt(), 1.7 * t + 0.3)]
            }
        })
        .collect()
}

fn reproducing_property() -> Outcome {
    let mut worst = 0.0f64;
    for l in LAMBDA_SETS {
        let n = l.len();
        let spec = ModelSpec::new(l).unwrap();
        let scales: Vec<f64> = l.iter().flat_map(|x| [x.abs(), x.abs()]).collect();
        let rule = tensor_gauss_rule(if n == 1 { 40 } else { 24 }, &scales).unwrap();
        let r = form_rank(spec.negatives(), n);
        let nodes: Vec<(Vec<Complex64>, f64, Vec<Complex64>)> = (0..rule.len())
            .map(|i| {
                let w = rule.complex_node(i);
                let e = (2.0 * l.iter().zip(&w).map(|(a, b)| a.abs() * b.norm_sqr()).sum::<f64>()).exp();
                let psi = model_basis_coefficients(&spec, &w, 3).unwrap();
                (w, rule.weight(i) * e * 2f64.powi(n as i32), psi)
            })
            .collect();
        let alphas = MultiIndex::all_up_to(n, 3);
        for z in sample_points(n) {
            let mut acc = vec![Complex64::default(); alphas.len()];
            for (w, wt, psi) in &nodes {
                let k = model_kernel(&spec, &z, w).unwrap().matrix[(r, r)] * *wt;
                for (a, p) in acc.iter_mut().zip(psi) {
                    *a += k * p;
                }
            }
            for (a, g) in alphas.iter().zip(&acc) {
                worst = worst.max((g - model_basis_coefficient(&spec, a, &z).unwrap()).norm());
            }
        }
    }
    ensure(worst <= 1e-6, format!("sup |∫K Ψ_α − Ψ_α| over |α| ≤ 3, 25 points = {worst:.2e} (≤ 1e-6)"))
}

fn gaussian_scale_invariance() -> Outcome {
    let conv = scan("q = 0\nk_list = [1, 4, 16, 64]\n[weight]\nlambdas = [1.0]\n[criteria]\nmax_distance = 1e-6\n")?;
    let d: Vec<String> = conv.report.points.iter().map(|p| format!("{:.1e}", p.distance)).collect();
    ensure(conv.report.pass, format!("d_k for k = 1, 4, 16, 64: [{}] (≤ 1e-6)", d.join(", ")))
}

fn perturbed_convergence() -> Outcome {
    let conv = scan(&format!("q = 0\nk_list = [4, 16, 64]\n{QUARTIC}[criteria]\ndecreasing = true\ndiagonal_rel_tol = 0.05\n"))?;
    let r = &conv.report;
    let d: Vec<String> = r.points.iter().map(|p| format!("{:.3e}", p.distance)).collect();
    let diag = r.points.last().unwrap().diagonal;
    let rel = (diag - ONE_OVER_PI).abs() / ONE_OVER_PI;
    ensure(
        r.pass && rel <= 0.05 && (r.model_diagonal - ONE_OVER_PI).abs() < 1e-15,
        format!("d_k = [{}] strictly decreasing; diag(0) at k=64 = {diag:.5} vs 1/π ({:.2}%, ≤ 5%)", d.join(", "), 100.0 * rel),
    )
}

fn diagonal_growth() -> Outcome {
    let conv = scan(&format!(
        "q = 0\nk_list = [4, 16, 64, 256]\n{QUARTIC}[criteria]\nslope_tol = 0.05\ncoefficient_rel_tol = 0.05\n"
    ))?;
    let f = conv.report.fit.ok_or("no fit")?;
    let rel = (f.coefficient - ONE_OVER_PI).abs() / ONE_OVER_PI;
    ensure(
        conv.report.pass && (f.slope - 1.0).abs() <= 0.05 && rel <= 0.05,
        format!("slope {:.4} (1 ± 0.05), coefficient {:.5} vs 1/π ({:.2}%, ≤ 5%)", f.slope, f.coefficient, 100.0 * rel),
    )
}

/// Analytic jets of `z^j e^{-λ|z|²}`.
fn gaussian_monomial_jet(l: f64, j: u32, z: Complex64) -> ScalarJet {
    let e = (-l * z.norm_sqr()).exp();
    let zj = z.powu(j);
    let zj1 = if j == 0 { c(0.0, 0.0) } else { z.powu(j - 1) * j as f64 };
    // f = z^j e, f_z = (j z^{j-1} − λ z̄ z^j) e, f_z̄ = −λ z z^j e
    let dz = (zj1 - z.conj() * zj * l) * e;
    let dzbar = -z * zj * l * e;
    // f_{z z̄} = ∂_z(−λ z^{j+1} e) = (−λ(j+1) z^j + λ² |z|² z^j) e
    let dzdzbar = (zj * (-(l) * (j as f64 + 1.0)) + zj * (l * l * z.norm_sqr())) * e;
    ScalarJet { value: zj * e, dz: vec![dz], dzbar: vec![dzbar], dzdzbar: vec![dzdzbar] }
}

fn landau_spectrum() -> Outcome {
    let w = WeightModel::model(&[1.0]).unwrap();
    let m = bergman_core::laplacian::DEFAULT_TRUNCATION[0];
    let spec0 = laplacian_spectrum(&assemble_laplacian(&OscillatorBasis::for_weight(&w, 0, m).unwrap(), &w, 4.0).unwrap()).unwrap();
    let (kd0, gap0) = spectral_gap(&spec0, 1e-9).unwrap();
    let zero_err = spec0.eigenvalues[..kd0].iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let spec1 = laplacian_spectrum(&assemble_laplacian(&OscillatorBasis::for_weight(&w, 1, m).unwrap(), &w, 4.0).unwrap()).unwrap();
    let (kd1, _) = spectral_gap(&spec1, 1e-9).unwrap();
    let low1 = spec1.eigenvalues[0];
    // symbolic oracle: z^j e^{-|z|²} is annihilated in degree 0, e^{-|z|²} dz̄ has eigenvalue 2
    let mut oracle = 0.0f64;
    let (none, one) = (FormIndex::empty(), FormIndex::new(vec![0]).unwrap());
    for z in [c(0.3, -0.2), c(-1.1, 0.4)] {
        for j in 0..4 {
            let f = gaussian_monomial_jet(1.0, j, z);
            oracle = oracle.max(model_laplacian_apply(&[1.0], &f, &none, &[z]).unwrap().norm());
        }
        let f = gaussian_monomial_jet(1.0, 0, z);
        oracle = oracle.max((model_laplacian_apply(&[1.0], &f, &one, &[z]).unwrap() - f.value * 2.0).norm());
    }
    ensure(
        kd0 >= 10 && zero_err <= 1e-8 && (gap0 - 2.0).abs() <= 1e-6 && kd1 == 0 && (low1 - 2.0).abs() <= 1e-6 && oracle < 1e-12,
        format!(
            "q=0: {kd0} zero modes (max |μ| {zero_err:.1e}), gap {gap0:.9}; q=1: kernel {kd1}, lowest {low1:.9}; oracle residual {oracle:.1e}"
        ),
    )
}

fn signature_dichotomy() -> Outcome {
    let pos = scan(&format!("q = 1\nk_list = [4, 16, 64]\n{QUARTIC}[criteria]\nfinal_distance = 1e-3\n"))?;
    let neg_src = QUARTIC.replace("lambdas = [1.0]", "lambdas = [-1.0]");
    let neg = scan(&format!("q = 1\nk_list = [4, 16, 64]\n{neg_src}"))?;
    let dpos = pos.report.points.last().unwrap().distance;
    let dneg = neg.report.points.last().unwrap().distance;
    let rel = dneg / ONE_OVER_PI;
    ensure(
        pos.report.pass && rel <= 0.02,
        format!("λ=+1: sup |K| at k=64 = {dpos:.2e} (≤ 1e-3); λ=−1: sup |K − K_model| / K_model(0,0) = {:.3}% (≤ 2%)", 100.0 * rel),
    )
}

fn cross_path() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, w) in [("gaussian", "[weight]\nlambdas = [1.0]\n"), ("quartic", QUARTIC)] {
        let d = cross_path_distance(&cfg(&format!("q = 0\nk_list = [16]\n{w}")), 16).map_err(|e| e.to_string())?;
        ok &= d <= 1e-4;
        parts.push(format!("{name} {d:.2e}"));
    }
    ensure(ok, format!("sup |K_gram − K_spectral| at k=16: {} (≤ 1e-4)", parts.join(", ")))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, rng_seed: RngSeed::Fixed(0x5eed_0009), failure_persistence: None, ..Config::default() })
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

fn invariants() -> Outcome {
    let mut names = Vec::new();
    let fail = |name: &str, e: String| format!("{name}: {e}");

    // contraction adjoint to wedge under random positive metrics
    runner(300)
        .run(
            &(proptest::collection::vec(complex(1.0), 3 + 3 + 3 + 9), 0.1..1.0f64, 1usize..=3),
            |(v, eps, q)| {
                let n = 3;
                let a = DMatrix::from_iterator(n, n, v[9..].iter().copied());
                let h = a.adjoint() * &a + DMatrix::identity(n, n) * c(eps, 0.0);
                let eta = FormValue::one_form(&v[..3]).unwrap();
                let lv = form_indices(n, q - 1).unwrap().len();
                let lu = form_indices(n, q).unwrap().len();
                let vv = FormValue::from_coeffs(n, q - 1, v[3..3 + lv].to_vec()).unwrap();
                let u = FormValue::from_coeffs(n, q, v[6..6 + lu].iter().chain(&v[..3]).take(lu).copied().collect()).unwrap();
                let lhs = pointwise_inner(&wedge(&eta, &vv).unwrap(), &u, &h).unwrap();
                let rhs = pointwise_inner(&vv, &contract(&eta, &u, &h).unwrap(), &h).unwrap();
                prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
                Ok(())
            },
        )
        .map_err(|e| fail("adjointness", e.to_string()))?;
    names.push("adjointness");

    // flat anticommutator ι_{η1}(η2 ∧ u) + η2 ∧ ι_{η1} u = ⟨η2|η1⟩ u
    runner(300)
        .run(&proptest::collection::vec(complex(1.0), 9), |v| {
            let id = DMatrix::<Complex64>::identity(3, 3);
            let (e1, e2) = (FormValue::one_form(&v[..3]).unwrap(), FormValue::one_form(&v[3..6]).unwrap());
            let u = FormValue::from_coeffs(3, 1, v[6..].to_vec()).unwrap();
            let lhs = contract(&e1, &wedge(&e2, &u).unwrap(), &id)
                .unwrap()
                .add(&wedge(&e2, &contract(&e1, &u, &id).unwrap()).unwrap())
                .unwrap();
            let pair: Complex64 = v[3..6].iter().zip(&v[..3]).map(|(a, b)| a * b.conj()).sum();
            prop_assert!(lhs.max_abs_diff(&u.scale(pair)) < 1e-13);
            Ok(())
        })
        .map_err(|e| fail("anticommutator", e.to_string()))?;
    names.push("anticommutator");

    // ∂̄² = 0 and Hermitian PSD Laplacians for random quartic couplings
    runner(6)
        .run(&(0.0..0.1f64, 0.0..0.1f64, -0.05..0.05f64, 1.0..32.0f64), |(a, b, m, k)| {
            let p = ZPoly::real_from_terms(
                2,
                [
                    (abs_power(2, 0, 2), a),
                    (abs_power(2, 1, 2), b),
                    (bergman_core::poly::Monomial::new(vec![1, 1], vec![1, 1]).unwrap(), m),
                ],
            )
            .unwrap();
            let w = WeightModel::new(&[1.0, -1.0], p, None).unwrap();
            let b0 = OscillatorBasis::for_weight(&w, 0, 3).unwrap();
            let d0 = assemble_dbar(&b0, &w, k).unwrap();
            let d1 = assemble_dbar(&d0.target, &w, k).unwrap();
            prop_assert!(max_abs(&(&d1.matrix * &d0.matrix)) < 1e-9 * max_abs(&d0.matrix).powi(2));
            for q in 0..=2 {
                let op = assemble_laplacian(&b0.with_degree(q).unwrap(), &w, k).unwrap();
                prop_assert!(max_abs(&(&op.matrix - op.matrix.adjoint())) < 1e-12);
                let s = laplacian_spectrum(&op).unwrap();
                prop_assert!(s.eigenvalues[0] > -1e-9 * s.max_abs_eigenvalue());
            }
            Ok(())
        })
        .map_err(|e| fail("dbar squared / hermitian psd", e.to_string()))?;
    names.push("∂̄²=0");
    names.push("hermitian-psd");

    // nested spectral projections
    let w = WeightModel::new(&[1.0], ZPoly::real_from_terms(1, [(abs_power(1, 0, 2), 0.05)]).unwrap(), None).unwrap();
    let b = OscillatorBasis::for_weight(&w, 0, 12).unwrap();
    let s = laplacian_spectrum(&assemble_laplacian(&b, &w, 16.0).unwrap()).unwrap();
    runner(64)
        .run(&(0.0..4.0f64, 0.0..4.0f64, complex(1.5)), |(c1, dc, z)| {
            let a = SpectralKernel::new(&s, &b, c1).unwrap().eval(&[z], &[z]).unwrap().matrix[(0, 0)].re;
            let bb = SpectralKernel::new(&s, &b, c1 + dc).unwrap().eval(&[z], &[z]).unwrap().matrix[(0, 0)].re;
            prop_assert!(bb >= a - 1e-13);
            Ok(())
        })
        .map_err(|e| fail("projection monotonicity", e.to_string()))?;
    names.push("projection-monotonicity");

    // (□_(k) u)(√k z) = k⁻¹ □_k(u(√k ·))(z) with difference-quotient jets
    let b = OscillatorBasis::for_weight(&w, 0, 4).unwrap();
    runner(5)
        .run(&(complex(0.8), proptest::collection::vec(0u32..4, 2)), |(z, st)| {
            for k in [4.0f64, 16.0] {
                let zs = [z * k.sqrt()];
                let lhs = localized_laplacian_apply(&w.scaled(k).unwrap(), 1.0, &[b.scalar_jet(&st, &zs)], 0, &zs).unwrap().coeffs()[0];
                let h = 1e-4 / k.sqrt();
                let f = |d: Complex64| b.eval_state(&st, &[(z + d) * k.sqrt()]);
                let (xp, xm, yp, ym, f0) = (f(c(h, 0.0)), f(c(-h, 0.0)), f(c(0.0, h)), f(c(0.0, -h)), f(c(0.0, 0.0)));
                let fx = (xp - xm) / (2.0 * h);
                let fy = (yp - ym) / (2.0 * h);
                let jet = ScalarJet {
                    value: f0,
                    dz: vec![(fx - fy * c(0.0, 1.0)) * 0.5],
                    dzbar: vec![(fx + fy * c(0.0, 1.0)) * 0.5],
                    dzdzbar: vec![(xp + xm + yp + ym - f0 * 4.0) / (4.0 * h * h)],
                };
                let rhs = localized_laplacian_apply(&w, k, &[jet], 0, &[z]).unwrap().coeffs()[0] / k;
                prop_assert!((lhs - rhs).norm() < 1e-5 * (1.0 + lhs.norm()));
            }
            Ok(())
        })
        .map_err(|e| fail("rescale relation", e.to_string()))?;
    names.push("rescale-relation");

    // deterministic CSV output in single-thread mode
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let src = format!("q = 0\nk_list = [4, 16]\n{QUARTIC}");
    let bytes = |tag: &str| -> Vec<u8> {
        let dir = tempfile::tempdir().unwrap();
        let conv = pool.install(|| convergence_scan(&cfg(&src)).unwrap());
        let p = dir.path().join(format!("{tag}.csv"));
        write_kernel_grid(&p, 1, &conv.grids[1]).unwrap();
        std::fs::read(p).unwrap()
    };
    if bytes("a") != bytes("b") {
        return Err("determinism: CSV outputs differ".into());
    }
    names.push("determinism");

    // refinement of D or M never raises d_k by more than 1e-8
    let run = |extra: &str, q: usize, lam: &str| -> Convergence {
        let src = format!("q = {q}\nk_list = [16]\n{}[numerics]\n{extra}\n", QUARTIC.replace("[1.0]", lam));
        scan(&src).unwrap()
    };
    let dconv: Vec<Convergence> = [12, 16, 20].iter().map(|d| run(&format!("degree_cap = {d}"), 0, "[1.0]")).collect();
    // nested Gram spaces: the diagonal grows pointwise with D
    for pair in dconv.windows(2) {
        let (a, b) = (&pair[0].grids[0], &pair[1].grids[0]);
        for i in 0..a.points.len() {
            let (da, db) = (a.kernel(i, i)[(0, 0)].re, b.kernel(i, i)[(0, 0)].re);
            if db < da - 1e-12 * da.abs().max(1.0) {
                return Err(format!("nested diagonal: {db} < {da} at grid point {i}"));
            }
        }
    }
    names.push("nested-diagonal");
    let ds: Vec<f64> = dconv.iter().map(|c| c.report.points[0].distance).collect();
    let ms: Vec<f64> =
        [12, 16, 20, 24].iter().map(|m| run(&format!("truncation = {m}"), 1, "[-1.0]").report.points[0].distance).collect();
    for v in [&ds, &ms] {
        if v.windows(2).any(|p| p[1] > p[0] + 1e-8) {
            return Err(format!("refinement: d_k over D = 12, 16, 20: {ds:?}; over M = 12, 16, 20, 24: {ms:?}"));
        }
    }
    names.push("refinement");
    Ok(format!("{} (fixed seed)", names.join(", ")))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "model closed form vs series", limit: Duration::from_secs(5), run: closed_form_vs_series },
        Criterion { id: 2, name: "reproducing property", limit: Duration::from_secs(10), run: reproducing_property },
        Criterion { id: 3, name: "gaussian scale invariance", limit: Duration::from_secs(10), run: gaussian_scale_invariance },
        Criterion { id: 4, name: "perturbed convergence", limit: Duration::from_secs(30), run: perturbed_convergence },
        Criterion { id: 5, name: "diagonal growth", limit: Duration::from_secs(60), run: diagonal_growth },
        Criterion { id: 6, name: "landau spectrum and gap", limit: Duration::from_secs(20), run: landau_spectrum },
        Criterion { id: 7, name: "signature dichotomy", limit: Duration::from_secs(60), run: signature_dichotomy },
        Criterion { id: 8, name: "cross-path consistency", limit: Duration::from_secs(30), run: cross_path },
        Criterion { id: 9, name: "invariant suites", limit: Duration::from_secs(120), run: invariants },
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for cr in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let t = Instant::now();
        let r = std::panic::catch_unwind(cr.run).unwrap_or_else(|_| Err("panicked".into()));
        let el = t.elapsed();
        let (ok, detail) = match r {
            Ok(d) if el <= cr.limit => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {} {:<28} {}  {}  [{:.1}s / {}s]",
            cr.id,
            cr.name,
            if ok { "PASS" } else { "FAIL" },
            detail,
            el.as_secs_f64(),
            cr.limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
