//! Global exponential stability certificates from the spectral radius of a
//! nonnegative test matrix, with the Perron-weighted contraction norm.

use crate::equilibria::{compose_maps, equilibrium_map, max_gain_matrix, solve_equilibrium_iterative, PiecewiseAffineMap};
use crate::error::{HsrError, Result};
use crate::hierarchy::Hierarchy;
use crate::ltn::{simulate, Ceiling, LtNetwork};
use crate::scalar::{lit, to_f64, Scalar};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 100_000;
const MU_CAP: f64 = 1e-6;
const PASS_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GesCertificate<T: Scalar> {
    /// `|W1| + |W2| Fbar |W3|`.
    pub test_matrix: DMatrix<T>,
    /// Spectral radius of the test matrix.
    pub rho: T,
    /// Spectral radius after the reducibility regularization (equals `rho` when `mu = 0`).
    pub rho_regularized: T,
    /// Positive left Perron vector of the regularized matrix, summing to one.
    pub alpha: DVector<T>,
    pub mu: T,
    /// Guaranteed decay exponent `(1 - rho_regularized) / tau`.
    pub rate: T,
    pub pass: bool,
}

/// Power iteration on `(A + I)^T` from the uniform vector. Returns
/// `(rho, alpha)` with `alpha` normalized to unit 1-norm.
fn perron<T: Scalar>(a: &DMatrix<T>) -> (T, DVector<T>) {
    let n = a.nrows();
    let shifted = (a + DMatrix::identity(n, n)).transpose();
    // 1e-10 is below single-precision resolution
    let tol = lit::<T>(POWER_TOL).max(crate::scalar::eps::<T>() * lit(10.0));
    let mut v = DVector::from_element(n, T::one() / lit(n as f64));
    let mut lambda = T::zero();
    let mut prev_dv = T::one();
    for _ in 0..POWER_MAX_ITERS {
        let w = &shifted * &v;
        let next_lambda = w.sum();
        let next = &w / next_lambda;
        let dv = (&next - &v).lp_norm(1);
        let dl = (next_lambda - lambda).abs();
        // observed linear convergence factor, to turn step size into an error bound
        let q = (dv / prev_dv).min(lit(0.999_999));
        v = next;
        lambda = next_lambda;
        prev_dv = dv;
        if dv == T::zero() || (dl <= tol * lambda * (T::one() - q) && dv <= tol * (T::one() - q)) {
            break;
        }
    }
    ((lambda - T::one()).max(T::zero()), v)
}

/// Strong connectivity of the support graph of `a` (`i -> j` when `a_ij > 0`).
pub fn is_irreducible<T: Scalar>(a: &DMatrix<T>) -> bool {
    let n = a.nrows();
    if n == 1 {
        return a[(0, 0)] > T::zero();
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let e = if forward { a[(i, j)] } else { a[(j, i)] };
                if e > T::zero() && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Certificate for the coupled condition `rho(|W1| + |W2| Fbar |W3|) < 1`.
///
/// `W1` is `n x n`, `W2` is `n x k`, `Fbar` is `k x l` and `W3` is `l x n`;
/// `k = l = 0` gives the single-layer condition.
pub fn ges_certificate<T: Scalar>(
    w1: &DMatrix<T>,
    w2: &DMatrix<T>,
    w3: &DMatrix<T>,
    fbar: &DMatrix<T>,
    tau: T,
) -> Result<GesCertificate<T>> {
    let n = w1.nrows();
    if w1.ncols() != n
        || w2.nrows() != n
        || w2.ncols() != fbar.nrows()
        || fbar.ncols() != w3.nrows()
        || w3.ncols() != n
    {
        return Err(HsrError::DimensionMismatch(format!(
            "certificate blocks W1 {:?}, W2 {:?}, Fbar {:?}, W3 {:?}",
            w1.shape(),
            w2.shape(),
            fbar.shape(),
            w3.shape()
        )));
    }
    if !(tau > T::zero()) {
        return Err(HsrError::InvalidInput("tau must be positive".into()));
    }
    if fbar.iter().any(|v| *v < T::zero()) {
        return Err(HsrError::InvalidInput("Fbar must be nonnegative".into()));
    }
    let test_matrix = w1.abs() + w2.abs() * fbar * w3.abs();
    if n == 0 {
        return Ok(GesCertificate {
            test_matrix,
            rho: T::zero(),
            rho_regularized: T::zero(),
            alpha: DVector::zeros(0),
            mu: T::zero(),
            rate: T::one() / tau,
            pass: true,
        });
    }
    let (rho, alpha0) = perron(&test_matrix);
    let (mu, rho_regularized, alpha) = if is_irreducible(&test_matrix) {
        (T::zero(), rho, alpha0)
    } else {
        let cap = lit::<T>(MU_CAP);
        let mu = if rho < T::one() { cap.min((T::one() - rho) / lit(4.0 * n as f64)) } else { cap };
        let (rr, a) = perron(&test_matrix.add_scalar(mu));
        (mu, rr, a)
    };
    let pass = rho_regularized < T::one() - lit(PASS_MARGIN);
    Ok(GesCertificate {
        test_matrix,
        rho,
        rho_regularized,
        alpha,
        mu,
        rate: (T::one() - rho_regularized) / tau,
        pass,
    })
}

/// Certificate for a single layer, `rho(|W|) < 1`.
pub fn ges_certificate_single<T: Scalar>(w: &DMatrix<T>, tau: T) -> Result<GesCertificate<T>> {
    let n = w.nrows();
    ges_certificate(w, &DMatrix::zeros(n, 0), &DMatrix::zeros(0, n), &DMatrix::zeros(0, 0), tau)
}

/// `alpha^T |v|`.
pub fn weighted_norm<T: Scalar>(alpha: &DVector<T>, v: &DVector<T>) -> T {
    alpha.iter().zip(v.iter()).fold(T::zero(), |acc, (a, x)| acc + *a * x.abs())
}

/// Boundedness status of the slowest layer.
#[derive(Clone, Debug, PartialEq)]
pub enum LayerOneCheck<T: Scalar> {
    /// All ceilings of the layer are finite, so its state is bounded.
    TriviallyBounded,
    Certified(GesCertificate<T>),
}

impl<T: Scalar> LayerOneCheck<T> {
    pub fn pass(&self) -> bool {
        match self {
            LayerOneCheck::TriviallyBounded => true,
            LayerOneCheck::Certified(c) => c.pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerCertificate<T: Scalar> {
    /// Zero-based layer index (0 is the slowest layer).
    pub layer: usize,
    /// `None` when a faster layer failed, so the map needed here is unavailable.
    pub certificate: Option<GesCertificate<T>>,
}

#[derive(Clone, Debug)]
pub struct HierarchyCertification<T: Scalar> {
    /// Layers `1..N` in ascending order.
    pub layers: Vec<LayerCertificate<T>>,
    pub layer_one: Option<LayerOneCheck<T>>,
    /// Recruitment maps `h_i^+` for layers `1..N`, `None` where unavailable.
    pub maps: Vec<Option<PiecewiseAffineMap<T>>>,
}

impl<T: Scalar> HierarchyCertification<T> {
    pub fn all_pass(&self) -> bool {
        self.layers.iter().all(|l| l.certificate.as_ref().is_some_and(|c| c.pass))
            && self.layer_one.as_ref().is_some_and(LayerOneCheck::pass)
    }

    /// Max-gain matrices `Fbar_i` of the recruitment maps (index 0 unused).
    pub fn gain_bounds(&self) -> Vec<Option<DMatrix<T>>> {
        self.maps.iter().map(|m| m.as_ref().map(max_gain_matrix)).collect()
    }
}

/// Builds the recruitment maps from the fastest layer upward and certifies
/// each layer `N, N-1, ..., 2`, plus the boundedness of layer 1.
pub fn certify_hierarchy<T: Scalar>(h: &Hierarchy<T>) -> Result<HierarchyCertification<T>> {
    let n_layers = h.len();
    let mut certs: Vec<Option<GesCertificate<T>>> = vec![None; n_layers];
    let mut maps: Vec<Option<PiecewiseAffineMap<T>>> = vec![None; n_layers];

    let last = n_layers - 1;
    let mut layer_one = None;
    if n_layers == 1 {
        layer_one = Some(layer_one_check(h, None)?);
    } else {
        let net = h.layer(last);
        let cert = ges_certificate_single(&net.w_pp(), net.tau())?;
        if cert.pass {
            maps[last] = Some(equilibrium_map(&net.w_pp(), net.m_plus())?);
        }
        certs[last] = Some(cert);

        for i in (1..last).rev() {
            let Some(inner) = maps[i + 1].clone() else { break };
            let net = h.layer(i);
            let (w2, w3) = (h.down_pp(i), h.up_pp(i));
            let cert = ges_certificate(&net.w_pp(), &w2, &w3, &max_gain_matrix(&inner), net.tau())?;
            if cert.pass {
                maps[i] = Some(compose_maps(&inner, &net.w_pp(), &w2, &w3, &h.layer(i + 1).c_plus(), net.m_plus())?);
            }
            certs[i] = Some(cert);
        }
        if let Some(inner) = maps[1].as_ref() {
            layer_one = Some(layer_one_check(h, Some(inner))?);
        }
    }
    if certs.iter().skip(1).any(Option::is_none) {
        log::warn!("some layers could not be certified because a faster layer failed");
    }
    Ok(HierarchyCertification {
        layers: (1..n_layers).map(|i| LayerCertificate { layer: i, certificate: certs[i].take() }).collect(),
        layer_one,
        maps,
    })
}

fn layer_one_check<T: Scalar>(h: &Hierarchy<T>, inner: Option<&PiecewiseAffineMap<T>>) -> Result<LayerOneCheck<T>> {
    let net = h.layer(0);
    if net.m_plus().iter().all(|c| c.is_finite()) {
        return Ok(LayerOneCheck::TriviallyBounded);
    }
    let cert = match inner {
        Some(map) => ges_certificate(&net.w_pp(), &h.down_pp(0), &h.up_pp(0), &max_gain_matrix(map), net.tau())?,
        None => ges_certificate_single(&net.w_pp(), net.tau())?,
    };
    Ok(LayerOneCheck::Certified(cert))
}

/// Outcome of simulating random initial states against a certificate envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub trials: usize,
    pub samples_checked: usize,
    /// Largest observed ratio of `||x(t) - x*||_alpha` to the envelope.
    pub worst_ratio: f64,
    pub violations: usize,
}

impl DecayReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Simulates `trials` random initial states of `net` under its constant
/// background input and checks the envelope
/// `||x(t) - x*||_alpha <= ||x(0) - x*||_alpha * exp(-rate t) * (1 + 1e-6)`.
///
/// The certificate must have been issued for the layer weight matrix `W`.
pub fn empirical_decay_check<T: Scalar>(
    net: &LtNetwork<T>,
    cert: &GesCertificate<T>,
    trials: usize,
    seed: u64,
) -> Result<DecayReport> {
    if !cert.pass {
        return Err(HsrError::CertificateFailed);
    }
    if cert.alpha.len() != net.n() {
        return Err(HsrError::DimensionMismatch("certificate does not match the network".into()));
    }
    let solve_tol = lit::<T>(1e-13).max(crate::scalar::eps::<T>() * lit(100.0));
    let xstar = solve_equilibrium_iterative(net.w(), net.m(), net.c(), solve_tol)?;
    let spread = to_f64(xstar.amax()) * 2.0 + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = net.tau() / lit(50.0);
    let t_end = net.tau() * lit(10.0);
    let zero = DVector::zeros(net.n());
    let star_norm = weighted_norm(&cert.alpha, &xstar);
    // absolute floor for the accuracy of x* and the box projection
    let floor = (solve_tol * lit(10.0) + crate::scalar::eps::<T>() * lit(64.0)) * (T::one() + star_norm);

    let mut report = DecayReport { trials, samples_checked: 0, worst_ratio: 0.0, violations: 0 };
    for _ in 0..trials {
        let x0 = DVector::from_iterator(
            net.n(),
            net.m().iter().map(|c| {
                let hi = match c {
                    Ceiling::Finite(m) => to_f64(*m),
                    Ceiling::Unbounded => spread,
                };
                lit::<T>(rng.random::<f64>() * hi)
            }),
        );
        let traj = simulate(net, &x0, |_| zero.clone(), (T::zero(), t_end), dt)?;
        let d0 = weighted_norm(&cert.alpha, &(&x0 - &xstar));
        for (t, x) in traj.iter() {
            let envelope = d0 * (-cert.rate * t).exp() * lit(1.0 + 1e-6) + floor;
            let dist = weighted_norm(&cert.alpha, &(x - &xstar));
            let ratio = to_f64(dist / envelope);
            report.worst_ratio = report.worst_ratio.max(ratio);
            if dist > envelope {
                report.violations += 1;
            }
            report.samples_checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn dense_spectral_radius(a: &DMatrix<f64>) -> f64 {
        a.clone().complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_matrices_pass_with_rho_zero() {
        let z = DMatrix::zeros(3, 3);
        let c = ges_certificate(&z, &DMatrix::zeros(3, 2), &DMatrix::zeros(2, 3), &DMatrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(c.rho, 0.0);
        assert!(c.pass);
        assert!(c.mu > 0.0);
        assert!(c.alpha.iter().all(|a| *a > 0.0));
    }

    #[test]
    fn lc_and_pd_blocks() {
        let fbar = DMatrix::from_element(1, 1, 1.0 / 0.99);
        let lc = ges_certificate(
            &m(2, 2, &[0.83, 0.0, 0.76, 0.0]),
            &m(2, 1, &[0.04, 0.58]),
            &m(1, 2, &[0.01, 0.0]),
            &fbar,
            1.0,
        )
        .unwrap();
        assert!((lc.rho - 0.83).abs() < 0.005 && lc.pass);
        assert_abs_diff_eq!(lc.test_matrix[(1, 0)], 0.76 + 0.58 * 0.01 / 0.99, epsilon = 1e-12);
        let pd = ges_certificate(
            &m(2, 2, &[0.12, 0.0, 0.56, 0.0]),
            &m(2, 1, &[0.39, 0.02]),
            &m(1, 2, &[4.7e-3, 0.0]),
            &fbar,
            1.0,
        )
        .unwrap();
        assert!((pd.rho - 0.12).abs() < 0.005 && pd.pass);
    }

    #[test]
    fn unstable_layer_fails() {
        let c = ges_certificate_single(&DMatrix::from_element(1, 1, 1.5), 1.0).unwrap();
        assert!(!c.pass);
        assert_abs_diff_eq!(c.rho, 1.5, epsilon = 1e-9);
        let edge = ges_certificate_single(&DMatrix::from_element(1, 1, 1.0), 1.0).unwrap();
        assert!(!edge.pass);
    }

    #[test]
    fn weighted_norm_examples() {
        let ones = DVector::from_element(2, 1.0);
        assert_eq!(weighted_norm(&ones, &DVector::from_vec(vec![1.0, -2.0])), 3.0);
        assert_eq!(weighted_norm(&ones, &DVector::zeros(2)), 0.0);
    }

    #[test]
    fn reducibility() {
        assert!(is_irreducible(&m(2, 2, &[0.0, 1.0, 1.0, 0.0])));
        assert!(!is_irreducible(&m(2, 2, &[0.5, 1.0, 0.0, 0.5])));
        assert!(!is_irreducible(&m(1, 1, &[0.0])));
    }

    #[test]
    fn scalar_decay_envelope_holds() {
        let net = LtNetwork::new(
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_element(1, 1.0),
            vec![Ceiling::Unbounded],
            1.0,
            DMatrix::zeros(1, 0),
            0,
        )
        .unwrap();
        let cert = ges_certificate_single(net.w(), net.tau()).unwrap();
        assert_abs_diff_eq!(cert.rate, 0.5, epsilon = 1e-9);
        let rep = empirical_decay_check(&net, &cert, 5, 3).unwrap();
        assert!(rep.pass(), "{rep:?}");
        // the scalar envelope is tight
        assert!(rep.worst_ratio > 0.99);
    }

    #[test]
    fn failing_certificate_is_refused() {
        let net = LtNetwork::autonomous(DMatrix::from_element(1, 1, 1.5), 1.0).unwrap();
        let cert = ges_certificate_single(net.w(), 1.0).unwrap();
        assert!(matches!(empirical_decay_check(&net, &cert, 1, 0), Err(HsrError::CertificateFailed)));
    }

    proptest! {
        #[test]
        fn power_iteration_matches_dense_eigensolver(
            n in 1usize..=8,
            vals in proptest::collection::vec(0.0f64..1.0, 64),
        ) {
            let a = DMatrix::from_iterator(n, n, vals.into_iter().take(n * n));
            let c = ges_certificate_single(&a, 1.0).unwrap();
            let oracle = dense_spectral_radius(&a);
            prop_assert!((c.rho - oracle).abs() < 1e-8 * (1.0 + oracle), "{} vs {}", c.rho, oracle);
            prop_assert!(c.alpha.iter().all(|v| *v > 0.0));
            // left eigenvector residual on the regularized matrix
            let reg = c.test_matrix.add_scalar(c.mu);
            let resid = (reg.transpose() * &c.alpha - &c.alpha * c.rho_regularized).amax();
            prop_assert!(resid < 1e-8);
        }

        #[test]
        fn weighted_norm_triangle(
            a in proptest::collection::vec(0.01f64..5.0, 4),
            v in proptest::collection::vec(-5.0f64..5.0, 4),
            w in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            let (a, v, w) = (DVector::from_vec(a), DVector::from_vec(v), DVector::from_vec(w));
            prop_assert!(weighted_norm(&a, &(&v + &w)) <= weighted_norm(&a, &v) + weighted_norm(&a, &w) + 1e-12);
            prop_assert!((weighted_norm(&a, &(&v * -2.5)) - 2.5 * weighted_norm(&a, &v)).abs() < 1e-12);
        }

        #[test]
        fn scaling_never_increases_rho(
            vals in proptest::collection::vec(0.0f64..1.0, 9),
            s in 0.01f64..1.0,
        ) {
            let a = DMatrix::from_vec(3, 3, vals);
            let full = ges_certificate_single(&a, 1.0).unwrap().rho;
            let scaled = ges_certificate_single(&(&a * s), 1.0).unwrap().rho;
            prop_assert!(scaled <= full + 1e-9);
        }
    }
}
