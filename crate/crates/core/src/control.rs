//! Feedback and feedforward synthesis for selective inhibition.
//!
//! Inhibited nodes receive `B^- u` through their control channels. The
//! feedback part `K x` cancels (or dominates) the excitation the inhibited
//! nodes receive from inside their layer and from the layer below; the
//! feedforward part `ubar` cancels excitation from the layer above and the
//! background input.

use crate::error::{HsrError, Result};
use crate::hierarchy::Hierarchy;
use crate::equilibria::PiecewiseAffineMap;
use crate::lp::{maximize, LpOutcome};
use crate::ltn::LtNetwork;
use crate::scalar::{eps, lit, to_f64, Scalar};
use nalgebra::{DMatrix, DVector};

/// How `B^- ubar = -q` is solved online for a nonnegative target `q`.
#[derive(Clone, Debug, PartialEq)]
pub enum OnlineSolve<T: Scalar> {
    /// `ubar = P (-q)` with `P` a right inverse of `B^-` and `-P >= 0`.
    Exact(DMatrix<T>),
    /// `ubar = v * max(q)` with `v >= 0` and `B^- v <= -1`.
    Scaled(DVector<T>),
}

impl<T: Scalar> OnlineSolve<T> {
    fn apply(&self, q: &DVector<T>) -> DVector<T> {
        match self {
            OnlineSolve::Exact(p) => p * (-q),
            OnlineSolve::Scaled(v) => v * q.iter().fold(T::zero(), |a, &b| a.max(b)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Feedforward<T: Scalar> {
    None,
    Constant(DVector<T>),
    /// Evaluated against the live state of the layer above:
    /// `B^- ubar = -[W_up^- x_above + offset]_+`.
    Online {
        w_up_minus: DMatrix<T>,
        offset: DVector<T>,
        solve: OnlineSolve<T>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlMode {
    FeedbackOnly,
    FeedforwardOnly,
    Combined,
}

/// `u(t) = K x(t) + ubar(t)` for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlLaw<T: Scalar> {
    /// Zero-based layer index.
    pub layer: usize,
    pub k: DMatrix<T>,
    pub feedforward: Feedforward<T>,
}

impl<T: Scalar> ControlLaw<T> {
    /// Constant open-loop input with no feedback.
    pub fn constant(layer: usize, n: usize, ubar: DVector<T>) -> Self {
        Self { layer, k: DMatrix::zeros(ubar.len(), n), feedforward: Feedforward::Constant(ubar) }
    }

    pub fn p(&self) -> usize {
        self.k.nrows()
    }

    pub fn mode(&self) -> ControlMode {
        let has_ff = !matches!(self.feedforward, Feedforward::None);
        let has_fb = self.k.iter().any(|v| *v != T::zero());
        match (has_fb, has_ff) {
            (true, true) => ControlMode::Combined,
            (false, true) => ControlMode::FeedforwardOnly,
            _ => ControlMode::FeedbackOnly,
        }
    }

    pub fn feedforward_at(&self, above: Option<&DVector<T>>) -> DVector<T> {
        match &self.feedforward {
            Feedforward::None => DVector::zeros(self.p()),
            Feedforward::Constant(u) => u.clone(),
            Feedforward::Online { w_up_minus, offset, solve } => {
                let drive = match above {
                    Some(x) => w_up_minus * x + offset,
                    None => offset.clone(),
                };
                solve.apply(&drive.map(|v| v.max(T::zero())))
            }
        }
    }

    /// Applied input for the layer state `x` given the state of the layer above.
    pub fn evaluate(&self, x: &DVector<T>, above: Option<&DVector<T>>) -> DVector<T> {
        &self.k * x + self.feedforward_at(above)
    }
}

/// Affine bound map `nu(xbar) = a xbar + b` on the state of a monotonically
/// bounded layer.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundMap<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
}

impl<T: Scalar> BoundMap<T> {
    pub fn eval(&self, xbar: &DVector<T>) -> DVector<T> {
        &self.a * xbar + &self.b
    }
}

fn pinv<T: Scalar>(b: &DMatrix<T>) -> DMatrix<T> {
    let tol = eps::<T>() * lit(1e3) * (T::one() + b.amax());
    b.clone().pseudo_inverse(tol).unwrap_or_else(|_| DMatrix::zeros(b.ncols(), b.nrows()))
}

fn positive_part<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    m.map(|v| v.max(T::zero()))
}

/// Least-squares solution of `b x = target` with a residual check.
fn solve_exact<T: Scalar>(b: &DMatrix<T>, target: &DMatrix<T>) -> Result<DMatrix<T>> {
    let x = pinv(b) * target;
    let residual = (b * &x - target).amax();
    let scale = T::one().max(target.amax());
    if residual > lit::<T>(1e-10) * scale {
        return Err(HsrError::InfeasibleExact { residual: to_f64(residual) });
    }
    Ok(x)
}

fn require_inhibited_rows<T: Scalar>(b_minus: &DMatrix<T>) -> Result<()> {
    match (0..b_minus.nrows()).find(|&i| b_minus.row(i).iter().all(|v| *v == T::zero())) {
        Some(i) => Err(HsrError::InvalidNetwork(format!("inhibited node {i} has no control channel"))),
        None => Ok(()),
    }
}

/// Gain `K` with `B^- K = -[W^{--} W^{-+}]`, zeroing the inhibited rows of
/// `W + B K`.
pub fn feedback_gain_bilayer<T: Scalar>(net: &LtNetwork<T>) -> Result<DMatrix<T>> {
    if net.r() == 0 {
        return Ok(DMatrix::zeros(net.p(), net.n()));
    }
    let b_minus = net.b_minus();
    require_inhibited_rows(&b_minus)?;
    solve_exact(&b_minus, &(-net.w_minus_rows()))
}

/// Constant feedforward for a bilayer network solving
/// `B^- ubar = -[W^-]_+ nu - [W21^-]_+ xbar1 - [c^-]_+`.
///
/// `nu_at_xbar1` bounds the layer state and `xbar1` bounds the state of the
/// layer above; `w21` is the full inter-layer block.
pub fn feedforward_bilayer<T: Scalar>(
    net: &LtNetwork<T>,
    xbar1: &DVector<T>,
    nu_at_xbar1: &DVector<T>,
    w21: &DMatrix<T>,
) -> Result<DVector<T>> {
    let r = net.r();
    if nu_at_xbar1.len() != net.n() || w21.shape() != (net.n(), xbar1.len()) {
        return Err(HsrError::DimensionMismatch("feedforward bounds".into()));
    }
    if r == 0 {
        return Ok(DVector::zeros(net.p()));
    }
    let b_minus = net.b_minus();
    require_inhibited_rows(&b_minus)?;
    let q = positive_part(&net.w_minus_rows()) * nu_at_xbar1
        + positive_part(&w21.rows(0, r).into_owned()) * xbar1
        + net.c_minus().map(|v| v.max(T::zero()));
    let ubar = solve_exact(&b_minus, &DMatrix::from_column_slice(r, 1, (-q).as_slice()))?.column(0).into_owned();
    let tol = eps::<T>().sqrt() * (T::one() + ubar.amax());
    if let Some(index) = ubar.iter().position(|v| *v < -tol) {
        return Err(HsrError::NegativeControl { index, value: to_f64(ubar[index]) });
    }
    Ok(ubar.map(|v| v.max(T::zero())))
}

/// `v >= 0` minimizing `1^T v` subject to `B^- v <= -1`.
fn inhibition_direction<T: Scalar>(b_minus: &DMatrix<T>) -> Result<DVector<T>> {
    let p = b_minus.ncols();
    let cost = vec![-T::one(); p];
    let rhs = vec![-T::one(); b_minus.nrows()];
    match maximize(&cost, b_minus, &rhs) {
        LpOutcome::Optimal { x, .. } => Ok(DVector::from_vec(x)),
        _ => Err(HsrError::InfeasibleInequality(
            "no nonnegative input inhibits every node; check the signs of B^-".into(),
        )),
    }
}

/// Nonnegative `K` with `B^- K = -a` if possible, else `B^- K <= -a` via
/// uniform scaling along an inhibition direction. `a` must be nonnegative.
fn dominating_gain<T: Scalar>(b_minus: &DMatrix<T>, a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let tol = eps::<T>().sqrt();
    if let Ok(k) = solve_exact(b_minus, &(-a)) {
        if k.iter().all(|v| *v >= -tol) {
            return Ok(k.map(|v| v.max(T::zero())));
        }
    }
    let v = inhibition_direction(b_minus)?;
    let col_max = DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.iter().fold(T::zero(), |m, &x| m.max(x))));
    log::info!("using scaled inhibition for an underactuated or sign-mixed layer");
    Ok(&v * col_max.transpose())
}

fn online_solver<T: Scalar>(b_minus: &DMatrix<T>) -> Result<OnlineSolve<T>> {
    let r = b_minus.nrows();
    let tol = eps::<T>().sqrt();
    let p = pinv(b_minus);
    let exact = (b_minus * &p - DMatrix::identity(r, r)).amax() < lit(1e-10);
    if exact && p.iter().all(|v| *v <= tol) {
        Ok(OnlineSolve::Exact(p.map(|v| v.min(T::zero()))))
    } else {
        Ok(OnlineSolve::Scaled(inhibition_direction(b_minus)?))
    }
}

/// Controls for every layer of a hierarchy.
///
/// `recruitment` holds `h_i^+` for each layer (index 0 unused); the max-gain
/// matrices of these maps bound the excitation an inhibited node receives
/// from the layer below. The deepest layer cancels `[W^{--} W^{-+}]`, the
/// others dominate `|W_ii^-| + |W_{i,i+1}^{-+}| Fbar_{i+1} |W_{i+1,i}^+|`.
/// Feedforward terms track the layer above online and also cover the
/// excitation `|W_{i,i+1}^{-+}| h_{i+1}^+(c_{i+1}^+)` present at zero state.
pub fn multilayer_controls<T: Scalar>(
    h: &Hierarchy<T>,
    recruitment: &[Option<PiecewiseAffineMap<T>>],
) -> Result<Vec<ControlLaw<T>>> {
    let n_layers = h.len();
    if recruitment.len() != n_layers {
        return Err(HsrError::DimensionMismatch("one recruitment map slot per layer is required".into()));
    }
    let mut laws = Vec::with_capacity(n_layers.saturating_sub(1));
    for i in 1..n_layers {
        let net = h.layer(i);
        let r = net.r();
        if r == 0 {
            laws.push(ControlLaw { layer: i, k: DMatrix::zeros(net.p(), net.n()), feedforward: Feedforward::None });
            continue;
        }
        let b_minus = net.b_minus();
        require_inhibited_rows(&b_minus)?;

        let mut offset = net.c_minus();
        let k = if i + 1 == n_layers {
            match feedback_gain_bilayer(net) {
                Ok(k) if k.iter().all(|v| *v >= -eps::<T>().sqrt()) => k,
                _ => dominating_gain(&b_minus, &net.w_minus_rows().abs())?,
            }
        } else {
            let below = recruitment[i + 1].as_ref().ok_or(HsrError::UniquenessNotCertified { rho: f64::NAN })?;
            let fbar = crate::equilibria::max_gain_matrix(below);
            let down = h.w_down(i);
            let below_net = h.layer(i + 1);
            let down_mp = down.view((0, below_net.r()), (r, below_net.n() - below_net.r())).abs();
            let up_p_rows = h.w_up(i).rows(below_net.r(), below_net.n() - below_net.r()).abs();
            let a = net.w_minus_rows().abs() + &down_mp * &fbar * up_p_rows;
            offset += &down_mp * below.eval(&below_net.c_plus())?;
            dominating_gain(&b_minus, &a)?
        };
        let w_up_minus = h.w_up(i - 1).rows(0, r).into_owned();
        let solve = online_solver(&b_minus)?;
        laws.push(ControlLaw { layer: i, k, feedforward: Feedforward::Online { w_up_minus, offset, solve } });
    }
    Ok(laws)
}
