//! Random instances and independent oracles shared by the integration tests.
#![allow(dead_code)]

use hsr::ltn::Ceiling;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use std::path::PathBuf;

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Spectral radius from the dense eigenvalues.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn clip(v: &DVector<f64>, m: &[Ceiling<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        v.len(),
        v.iter().zip(m).map(|(&x, c)| match c {
            Ceiling::Finite(hi) => x.max(0.0).min(*hi),
            Ceiling::Unbounded => x.max(0.0),
        }),
    )
}

/// Plain Picard iteration of `x = [W x + d]_0^m` until the update stalls.
pub fn fixed_point(w: &DMatrix<f64>, m: &[Ceiling<f64>], d: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(d.len());
    for _ in 0..100_000 {
        let next = clip(&(w * &x + d), m);
        let change = (&next - &x).amax();
        x = next;
        if change <= 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    x
}

pub fn uniform_matrix(rng: &mut impl RngCore, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

pub fn uniform_vector(rng: &mut impl RngCore, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// Random `n x n` weights rescaled so that `rho(|W|)` is `target`.
pub fn weights_with_radius(rng: &mut impl RngCore, n: usize, target: f64) -> DMatrix<f64> {
    let mut w = uniform_matrix(rng, n, n, -1.0, 1.0);
    // sparsify a little so that some instances are reducible
    for v in w.iter_mut() {
        if rng.random_bool(0.2) {
            *v = 0.0;
        }
    }
    let rho = spectral_radius(&w.abs());
    if rho == 0.0 {
        w[(0, 0)] = target;
        return w;
    }
    w * (target / rho)
}

/// Each node bounded with probability one half, ceiling in `[0.5, 3]`.
pub fn mixed_ceilings(rng: &mut impl RngCore, n: usize) -> Vec<Ceiling<f64>> {
    (0..n)
        .map(|_| if rng.random_bool(0.5) { Ceiling::Finite(rng.random_range(0.5..3.0)) } else { Ceiling::Unbounded })
        .collect()
}
