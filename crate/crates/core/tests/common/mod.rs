#![allow(dead_code)]

use bergman_core::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

pub const SEED: u64 = 0x00b3_a9d1_2024;

pub fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(SEED), failure_persistence: None, ..Config::default() }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| Complex64::new(a, b))
}

pub fn point(n: usize, r: f64) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec(complex(r), n)
}

/// Central differences for `∂/∂z_i`, `∂/∂z̄_i` and `∂²/∂z_i∂z̄_i`.
pub fn fd_jet(f: impl Fn(&[Complex64]) -> Complex64, z: &[Complex64], h: f64) -> bergman_core::model::ScalarJet {
    let n = z.len();
    let shift = |i: usize, d: Complex64| {
        let mut w = z.to_vec();
        w[i] += d;
        f(&w)
    };
    let mut dz = Vec::new();
    let mut dzbar = Vec::new();
    let mut dzdzbar = Vec::new();
    let f0 = f(z);
    for i in 0..n {
        let (xp, xm) = (shift(i, c(h, 0.0)), shift(i, c(-h, 0.0)));
        let (yp, ym) = (shift(i, c(0.0, h)), shift(i, c(0.0, -h)));
        let fx = (xp - xm) / (2.0 * h);
        let fy = (yp - ym) / (2.0 * h);
        dz.push((fx - fy * c(0.0, 1.0)) * 0.5);
        dzbar.push((fx + fy * c(0.0, 1.0)) * 0.5);
        dzdzbar.push((xp + xm + yp + ym - f0 * 4.0) / (4.0 * h * h));
    }
    bergman_core::model::ScalarJet { value: f0, dz, dzbar, dzdzbar }
}
