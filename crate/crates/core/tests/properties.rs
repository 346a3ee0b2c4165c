mod common;

use common::*;
use hsr::equilibria::{equilibrium_map, lipschitz_constant, solve_equilibrium_iterative};
use hsr::ltn::{Ceiling, LtNetwork};
use hsr::stability::ges_certificate_single;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A seeded network with `rho(|W|) = target` and mixed ceilings.
fn network(seed: u64, n: usize, target: f64) -> (DMatrix<f64>, Vec<Ceiling<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (weights_with_radius(&mut rng, n, target), mixed_ceilings(&mut rng, n))
}

fn input(n: usize) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-4.0..4.0f64, n).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_value_is_a_fixed_point(seed in any::<u64>(), n in 1usize..=4, target in 0.05..0.9f64, raw in input(4)) {
        let (w, m) = network(seed, n, target);
        let d = raw.rows(0, n).into_owned();
        let x = equilibrium_map(&w, &m).unwrap().eval(&d).unwrap();
        prop_assert!((&x - clip(&(&w * &x + &d), &m)).amax() < 1e-10);
        prop_assert!((&x - fixed_point(&w, &m, &d)).amax() < 1e-9);
    }

    #[test]
    fn library_iteration_agrees_with_map(seed in any::<u64>(), n in 1usize..=4, target in 0.05..0.9f64, raw in input(4)) {
        let (w, m) = network(seed, n, target);
        let d = raw.rows(0, n).into_owned();
        let x = equilibrium_map(&w, &m).unwrap().eval(&d).unwrap();
        let y = solve_equilibrium_iterative(&w, &m, &d, 1e-12).unwrap();
        prop_assert!((x - y).amax() < 1e-9);
    }

    #[test]
    fn map_respects_its_lipschitz_constant(
        seed in any::<u64>(), n in 1usize..=4, target in 0.05..0.9f64, a in input(4), b in input(4)
    ) {
        let (w, m) = network(seed, n, target);
        let map = equilibrium_map(&w, &m).unwrap();
        let (a, b) = (a.rows(0, n).into_owned(), b.rows(0, n).into_owned());
        let gap = (map.eval(&a).unwrap() - map.eval(&b).unwrap()).norm();
        prop_assert!(gap <= lipschitz_constant(&map) * (&a - &b).norm() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn values_stay_in_the_box(seed in any::<u64>(), n in 1usize..=4, target in 0.05..0.9f64, raw in input(4)) {
        let (w, m) = network(seed, n, target);
        let x = equilibrium_map(&w, &m).unwrap().eval(&raw.rows(0, n).into_owned()).unwrap();
        for (v, c) in x.iter().zip(&m) {
            prop_assert!(*v >= 0.0);
            if let Ceiling::Finite(hi) = c {
                prop_assert!(*v <= *hi + 1e-12);
            }
        }
    }

    #[test]
    fn certificate_matches_dense_radius(seed in any::<u64>(), n in 1usize..=5, target in 0.05..1.5f64) {
        let (w, _) = network(seed, n, target);
        let cert = ges_certificate_single(&w, 1.0).unwrap();
        prop_assert!((cert.rho - spectral_radius(&w.abs())).abs() < 1e-7);
        prop_assert_eq!(cert.pass, cert.rho_regularized < 1.0 - 1e-9);
    }
}

#[test]
fn single_precision_core_tracks_double() {
    let (w, m) = network(17, 3, 0.6);
    let d = DVector::from_vec(vec![1.0, -0.5, 2.0]);
    let x64 = equilibrium_map(&w, &m).unwrap().eval(&d).unwrap();
    let w32 = w.map(|v| v as f32);
    let m32: Vec<Ceiling<f32>> = m
        .iter()
        .map(|c| match c {
            Ceiling::Finite(v) => Ceiling::Finite(*v as f32),
            Ceiling::Unbounded => Ceiling::Unbounded,
        })
        .collect();
    let x32 = equilibrium_map(&w32, &m32).unwrap().eval(&d.map(|v| v as f32)).unwrap();
    for (a, b) in x32.iter().zip(x64.iter()) {
        assert!((f64::from(*a) - b).abs() < 1e-4, "{a} vs {b}");
    }
    let net = LtNetwork::new(w32, DVector::zeros(3), m32, 1.0f32, DMatrix::zeros(3, 0), 0).unwrap();
    assert!(ges_certificate_single(net.w(), net.tau()).unwrap().pass);
}
