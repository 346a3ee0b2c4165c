//! Linear-threshold network layer: data model, vector field and simulation.
//!
//! A layer evolves as `tau * x' = -x + [W x + d(t)]_0^m`, where the bracket
//! is the elementwise projection onto `[0, m_i]`. Nodes `0..r` form the
//! inhibited (task-irrelevant) partition and `r..n` the recruited one.

use crate::error::{HsrError, Result};
use crate::ode::{rk4_step, step_count};
use crate::scalar::{lit, Scalar};
use crate::trajectory::Trajectory;
use nalgebra::{DMatrix, DVector};
use std::ops::Range;

/// Upper saturation bound of a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ceiling<T> {
    Finite(T),
    Unbounded,
}

impl<T: Scalar> Ceiling<T> {
    /// Projects `v` onto `[0, ceiling]`.
    #[inline]
    pub fn clamp(self, v: T) -> T {
        let lo = if v > T::zero() { v } else { T::zero() };
        match self {
            Ceiling::Finite(m) if lo > m => m,
            _ => lo,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Ceiling::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Ceiling::Finite(m) => Some(m),
            Ceiling::Unbounded => None,
        }
    }
}

/// Dale's-law sign constraint on the outgoing weights of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Excitatory,
    Inhibitory,
    Free,
}

/// Elementwise projection of `v` onto the box `[0, m]`.
pub fn clip<T: Scalar>(v: &DVector<T>, m: &[Ceiling<T>]) -> DVector<T> {
    assert_eq!(v.len(), m.len(), "clip: vector and ceiling lengths differ");
    DVector::from_iterator(v.len(), v.iter().zip(m).map(|(&x, c)| c.clamp(x)))
}

/// True when `0 - tol <= x <= m + tol` elementwise.
pub fn in_box<T: Scalar>(x: &DVector<T>, m: &[Ceiling<T>], tol: T) -> bool {
    x.iter().zip(m).all(|(&v, c)| {
        v >= -tol
            && match c {
                Ceiling::Finite(mi) => v <= *mi + tol,
                Ceiling::Unbounded => true,
            }
    })
}

/// One linear-threshold layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LtNetwork<T: Scalar> {
    w: DMatrix<T>,
    c: DVector<T>,
    m: Vec<Ceiling<T>>,
    tau: T,
    b: DMatrix<T>,
    r: usize,
    sign_mask: Option<Vec<Sign>>,
}

impl<T: Scalar> LtNetwork<T> {
    pub fn new(
        w: DMatrix<T>,
        c: DVector<T>,
        m: Vec<Ceiling<T>>,
        tau: T,
        b: DMatrix<T>,
        r: usize,
    ) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n {
            return Err(HsrError::InvalidNetwork(format!(
                "W must be square, got {}x{}",
                n,
                w.ncols()
            )));
        }
        if n == 0 {
            return Err(HsrError::InvalidNetwork("network has no nodes".into()));
        }
        if c.len() != n || m.len() != n {
            return Err(HsrError::InvalidNetwork(format!(
                "c has {} entries and m has {}, expected {n}",
                c.len(),
                m.len()
            )));
        }
        if b.nrows() != n {
            return Err(HsrError::InvalidNetwork(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if !(tau > T::zero()) {
            return Err(HsrError::InvalidNetwork(format!("tau must be positive, got {tau}")));
        }
        if let Some(i) = m.iter().position(|c| matches!(c, Ceiling::Finite(v) if !(*v > T::zero())))
        {
            return Err(HsrError::InvalidNetwork(format!("ceiling m[{i}] must be positive")));
        }
        if r > n {
            return Err(HsrError::InvalidNetwork(format!("r = {r} exceeds n = {n}")));
        }
        Ok(Self { w, c, m, tau, b, r, sign_mask: None })
    }

    /// Layer with no control channels, no background input and unbounded ceilings.
    pub fn autonomous(w: DMatrix<T>, tau: T) -> Result<Self> {
        let n = w.nrows();
        Self::new(
            w,
            DVector::zeros(n),
            vec![Ceiling::Unbounded; n],
            tau,
            DMatrix::zeros(n, 0),
            0,
        )
    }

    pub fn with_sign_mask(mut self, mask: Vec<Sign>) -> Result<Self> {
        if mask.len() != self.n() {
            return Err(HsrError::InvalidNetwork(format!(
                "sign mask has {} entries, expected {}",
                mask.len(),
                self.n()
            )));
        }
        self.sign_mask = Some(mask);
        Ok(self)
    }

    pub fn with_background(mut self, c: DVector<T>) -> Result<Self> {
        if c.len() != self.n() {
            return Err(HsrError::DimensionMismatch("background input".into()));
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_tau(mut self, tau: T) -> Result<Self> {
        if !(tau > T::zero()) {
            return Err(HsrError::InvalidNetwork(format!("tau must be positive, got {tau}")));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }
    /// Number of control channels.
    pub fn p(&self) -> usize {
        self.b.ncols()
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn w(&self) -> &DMatrix<T> {
        &self.w
    }
    pub fn c(&self) -> &DVector<T> {
        &self.c
    }
    pub fn m(&self) -> &[Ceiling<T>] {
        &self.m
    }
    pub fn tau(&self) -> T {
        self.tau
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn sign_mask(&self) -> Option<&[Sign]> {
        self.sign_mask.as_deref()
    }

    /// Index range of the inhibited partition.
    pub fn minus(&self) -> Range<usize> {
        0..self.r
    }
    /// Index range of the recruited partition.
    pub fn plus(&self) -> Range<usize> {
        self.r..self.n()
    }

    pub fn m_plus(&self) -> &[Ceiling<T>] {
        &self.m[self.r..]
    }

    pub fn c_plus(&self) -> DVector<T> {
        self.c.rows(self.r, self.n() - self.r).into_owned()
    }

    pub fn c_minus(&self) -> DVector<T> {
        self.c.rows(0, self.r).into_owned()
    }

    /// `W^{++}`: recruited rows and columns.
    pub fn w_pp(&self) -> DMatrix<T> {
        let k = self.n() - self.r;
        self.w.view((self.r, self.r), (k, k)).into_owned()
    }

    /// `[W^{--} W^{-+}]`: inhibited rows, all columns.
    pub fn w_minus_rows(&self) -> DMatrix<T> {
        self.w.rows(0, self.r).into_owned()
    }

    /// `B^-`: inhibited rows of the control matrix.
    pub fn b_minus(&self) -> DMatrix<T> {
        self.b.rows(0, self.r).into_owned()
    }

    /// The recruited subnetwork as a standalone layer.
    pub fn recruited_subnetwork(&self) -> Self {
        let k = self.n() - self.r;
        Self {
            w: self.w_pp(),
            c: self.c_plus(),
            m: self.m_plus().to_vec(),
            tau: self.tau,
            b: DMatrix::zeros(k, 0),
            r: 0,
            sign_mask: self.sign_mask.as_ref().map(|s| s[self.r..].to_vec()),
        }
    }

    /// Vector field `(-x + [W x + d_ext]_0^m) / tau`; `d_ext` already
    /// contains the background input.
    pub fn rhs(&self, x: &DVector<T>, d_ext: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.n() || d_ext.len() != self.n() {
            return Err(HsrError::DimensionMismatch(format!(
                "rhs expects vectors of length {}, got x: {}, d: {}",
                self.n(),
                x.len(),
                d_ext.len()
            )));
        }
        Ok(self.rhs_unchecked(x, d_ext))
    }

    #[inline]
    pub(crate) fn rhs_unchecked(&self, x: &DVector<T>, d_ext: &DVector<T>) -> DVector<T> {
        let drive = &self.w * x + d_ext;
        (clip(&drive, &self.m) - x) / self.tau
    }

    pub(crate) fn check_box(&self, x0: &DVector<T>) -> Result<()> {
        if x0.len() != self.n() {
            return Err(HsrError::DimensionMismatch(format!(
                "initial state has {} entries, expected {}",
                x0.len(),
                self.n()
            )));
        }
        let tol = lit::<T>(1e-12);
        for (i, (&v, c)) in x0.iter().zip(&self.m).enumerate() {
            let above = matches!(c, Ceiling::Finite(mi) if v > *mi + tol);
            if v < -tol || above || !v.is_finite() {
                return Err(HsrError::OutsideBox { node: i });
            }
        }
        Ok(())
    }
}

/// Checks `0 < dt <= tau / 20`.
pub(crate) fn check_step<T: Scalar>(dt: T, tau_min: T) -> Result<()> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(HsrError::InvalidStep { dt: crate::scalar::to_f64(dt), reason: "must be positive".into() });
    }
    if dt > tau_min / lit(20.0) * lit(1.0 + 1e-12) {
        return Err(HsrError::InvalidStep {
            dt: crate::scalar::to_f64(dt),
            reason: format!("exceeds tau/20 = {}", tau_min / lit(20.0)),
        });
    }
    Ok(())
}

/// Integrates one layer with fixed-step RK4 under `d(t) = c + input(t)`.
///
/// Each accepted state is projected back onto `[0, m]`. The total input
/// `d(t_k)` is logged at every sample.
pub fn simulate<T, F>(
    net: &LtNetwork<T>,
    x0: &DVector<T>,
    input: F,
    t_span: (T, T),
    dt: T,
) -> Result<Trajectory<T>>
where
    T: Scalar,
    F: Fn(T) -> DVector<T>,
{
    check_step(dt, net.tau())?;
    net.check_box(x0)?;
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(HsrError::InvalidInput("t_span end precedes start".into()));
    }
    let total = |t: T| -> Result<DVector<T>> {
        let u = input(t);
        if u.len() != net.n() {
            return Err(HsrError::DimensionMismatch(format!(
                "input has {} entries, expected {}",
                u.len(),
                net.n()
            )));
        }
        Ok(net.c() + u)
    };
    // validate the input dimension once before the hot loop
    let first = total(t0)?;

    let steps = step_count(t0, t1, dt);
    let mut samples = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    let field = |t: T, x: &DVector<T>| net.rhs_unchecked(x, &(net.c() + input(t)));

    let mut x = x0.clone();
    samples.push(x.clone());
    inputs.push(first);
    for k in 0..steps {
        let t = t0 + dt * lit::<T>(k as f64);
        x = clip(&rk4_step(&field, t, &x, dt), net.m());
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HsrError::SimulationDiverged(format!("non-finite state at step {k}")));
        }
        samples.push(x.clone());
        inputs.push(net.c() + input(t + dt));
    }
    Ok(Trajectory::new(t0, dt, samples).with_inputs(inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(w: f64, m: Ceiling<f64>, tau: f64) -> LtNetwork<f64> {
        LtNetwork::new(
            DMatrix::from_element(1, 1, w),
            DVector::zeros(1),
            vec![m],
            tau,
            DMatrix::zeros(1, 0),
            0,
        )
        .unwrap()
    }

    #[test]
    fn clip_projects_onto_box() {
        let v = DVector::from_vec(vec![-1.0, 0.5, 7.0]);
        let m = [Ceiling::Unbounded, Ceiling::Unbounded, Ceiling::Finite(5.0)];
        assert_eq!(clip(&v, &m), DVector::from_vec(vec![0.0, 0.5, 5.0]));
        let inside = DVector::from_vec(vec![0.0, 0.3, 5.0]);
        assert_eq!(clip(&inside, &m), inside);
        assert_eq!(clip(&DVector::from_element(1, 3.0), &[Ceiling::Finite(1.0)])[0], 1.0);
    }

    #[test]
    fn rhs_examples() {
        let net = LtNetwork::<f64>::autonomous(DMatrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(net.rhs(&DVector::zeros(2), &DVector::zeros(2)).unwrap(), DVector::zeros(2));

        let net = scalar(0.5, Ceiling::Unbounded, 1.0);
        let v = net.rhs(&DVector::from_element(1, 2.0), &DVector::from_element(1, 1.0)).unwrap();
        assert_eq!(v[0], 0.0);

        let net = scalar(0.0, Ceiling::Finite(1.0), 2.0);
        let v = net.rhs(&DVector::zeros(1), &DVector::from_element(1, 5.0)).unwrap();
        assert_eq!(v[0], 0.5);

        assert!(matches!(
            net.rhs(&DVector::zeros(2), &DVector::zeros(1)),
            Err(HsrError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        let w = DMatrix::<f64>::zeros(2, 2);
        let ok = |tau: f64, m: Vec<Ceiling<f64>>, r: usize| {
            LtNetwork::new(w.clone(), DVector::zeros(2), m, tau, DMatrix::zeros(2, 1), r)
        };
        assert!(ok(1.0, vec![Ceiling::Unbounded; 2], 2).is_ok());
        assert!(ok(0.0, vec![Ceiling::Unbounded; 2], 0).is_err());
        assert!(ok(1.0, vec![Ceiling::Finite(0.0), Ceiling::Unbounded], 0).is_err());
        assert!(ok(1.0, vec![Ceiling::Unbounded; 2], 3).is_err());
        assert!(LtNetwork::new(w.clone(), DVector::zeros(2), vec![Ceiling::Unbounded; 2], 1.0, DMatrix::zeros(3, 1), 0).is_err());
    }

    #[test]
    fn scalar_linear_regime_matches_closed_form() {
        let net = scalar(0.5, Ceiling::Unbounded, 1.0);
        let traj = simulate(&net, &DVector::zeros(1), |_| DVector::from_element(1, 1.0), (0.0, 10.0), 0.01)
            .unwrap();
        for (t, x) in traj.iter() {
            assert_abs_diff_eq!(x[0], 2.0 * (1.0 - (-0.5 * t).exp()), epsilon = 1e-6);
        }
    }

    #[test]
    fn equilibrium_is_invariant() {
        let net = scalar(0.5, Ceiling::Unbounded, 1.0);
        let traj = simulate(&net, &DVector::from_element(1, 2.0), |_| DVector::from_element(1, 1.0), (0.0, 5.0), 0.05)
            .unwrap();
        assert!(traj.samples().iter().all(|x| (x[0] - 2.0).abs() < 1e-9));
    }

    #[test]
    fn simulate_rejects_bad_steps_and_states() {
        let net = scalar(0.5, Ceiling::Finite(1.0), 1.0);
        let zero = |_| DVector::zeros(1);
        assert!(matches!(
            simulate(&net, &DVector::zeros(1), zero, (0.0, 1.0), 0.1),
            Err(HsrError::InvalidStep { .. })
        ));
        assert!(matches!(
            simulate(&net, &DVector::from_element(1, 2.0), zero, (0.0, 1.0), 0.01),
            Err(HsrError::OutsideBox { node: 0 })
        ));
        assert!(matches!(
            simulate(&net, &DVector::zeros(1), |_| DVector::zeros(3), (0.0, 1.0), 0.01),
            Err(HsrError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn generic_over_f32() {
        let net = LtNetwork::<f32>::new(
            DMatrix::from_element(1, 1, 0.5f32),
            DVector::from_element(1, 1.0f32),
            vec![Ceiling::Unbounded],
            1.0,
            DMatrix::zeros(1, 0),
            0,
        )
        .unwrap();
        let traj = simulate(&net, &DVector::zeros(1), |_| DVector::zeros(1), (0.0, 20.0), 0.02).unwrap();
        assert!((traj.last()[0] - 2.0).abs() < 1e-3);
    }
}
