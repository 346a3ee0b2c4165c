//! Multi-layer networks with timescale separation: joint simulation,
//! reference trajectories from recruitment maps, tracking errors and
//! timescale sweeps.

use crate::control::ControlLaw;
use crate::equilibria::PiecewiseAffineMap;
use crate::error::{HsrError, Result};
use crate::ltn::{check_step, clip, LtNetwork};
use crate::ode::{rk4_step, step_count};
use crate::scalar::{lit, Scalar};
use crate::stability::certify_hierarchy;
use crate::trajectory::Trajectory;
use nalgebra::{DMatrix, DVector};

/// Ordered layers, slowest first, with nearest-neighbour coupling blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Hierarchy<T: Scalar> {
    layers: Vec<LtNetwork<T>>,
    /// `w_down[i] = W_{i,i+1}`: input to layer `i` from the layer below.
    w_down: Vec<DMatrix<T>>,
    /// `w_up[i] = W_{i+1,i}`: input to layer `i+1` from the layer above.
    w_up: Vec<DMatrix<T>>,
}

impl<T: Scalar> Hierarchy<T> {
    pub fn new(layers: Vec<LtNetwork<T>>, w_down: Vec<DMatrix<T>>, w_up: Vec<DMatrix<T>>) -> Result<Self> {
        let n = layers.len();
        if n == 0 {
            return Err(HsrError::InvalidHierarchy("no layers".into()));
        }
        if w_down.len() + 1 != n || w_up.len() + 1 != n {
            return Err(HsrError::InvalidHierarchy(format!(
                "{n} layers need {} coupling blocks in each direction",
                n - 1
            )));
        }
        if layers[0].r() != 0 {
            return Err(HsrError::InvalidHierarchy("the slowest layer cannot have inhibited nodes".into()));
        }
        for i in 0..n - 1 {
            let (a, b) = (&layers[i], &layers[i + 1]);
            if !(b.tau() < a.tau()) {
                return Err(HsrError::InvalidHierarchy(format!(
                    "time constants must strictly decrease (layer {} has {}, layer {} has {})",
                    i,
                    a.tau(),
                    i + 1,
                    b.tau()
                )));
            }
            if w_down[i].shape() != (a.n(), b.n()) || w_up[i].shape() != (b.n(), a.n()) {
                return Err(HsrError::InvalidHierarchy(format!(
                    "coupling blocks between layers {i} and {} have shapes {:?} and {:?}",
                    i + 1,
                    w_down[i].shape(),
                    w_up[i].shape()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.b().rows(l.r(), l.n() - l.r()).iter().any(|v| *v != T::zero()) {
                return Err(HsrError::InvalidHierarchy(format!(
                    "layer {i}: control channels may only reach inhibited nodes"
                )));
            }
        }
        Ok(Self { layers, w_down, w_up })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }
    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
    pub fn layer(&self, i: usize) -> &LtNetwork<T> {
        &self.layers[i]
    }
    pub fn layers(&self) -> &[LtNetwork<T>] {
        &self.layers
    }
    pub fn w_down(&self, i: usize) -> &DMatrix<T> {
        &self.w_down[i]
    }
    pub fn w_up(&self, i: usize) -> &DMatrix<T> {
        &self.w_up[i]
    }

    /// `W_{i,i+1}^{++}`.
    pub fn down_pp(&self, i: usize) -> DMatrix<T> {
        let (a, b) = (&self.layers[i], &self.layers[i + 1]);
        self.w_down[i].view((a.r(), b.r()), (a.n() - a.r(), b.n() - b.r())).into_owned()
    }

    /// `W_{i+1,i}^{++}`.
    pub fn up_pp(&self, i: usize) -> DMatrix<T> {
        let (a, b) = (&self.layers[i], &self.layers[i + 1]);
        self.w_up[i].view((b.r(), a.r()), (b.n() - b.r(), a.n() - a.r())).into_owned()
    }

    /// Timescale ratios `tau_{i+1} / tau_i`.
    pub fn epsilons(&self) -> Vec<T> {
        self.layers.windows(2).map(|w| w[1].tau() / w[0].tau()).collect()
    }

    /// Copy with `tau_{i+1} = eps * tau_i` for every `i`, keeping `tau_1`.
    pub fn rescaled(&self, eps: T) -> Result<Self> {
        if !(eps > T::zero() && eps < T::one()) {
            return Err(HsrError::InvalidInput(format!("epsilon must lie in (0, 1), got {eps}")));
        }
        let mut layers = self.layers.clone();
        for i in 1..layers.len() {
            let tau = layers[i - 1].tau() * eps;
            layers[i] = layers[i].clone().with_tau(tau)?;
        }
        Self::new(layers, self.w_down.clone(), self.w_up.clone())
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for l in &self.layers {
            out.push(out.last().unwrap() + l.n());
        }
        out
    }
}

/// Per-layer trajectories of a joint run plus the applied control inputs.
#[derive(Clone, Debug)]
pub struct HierarchyTrajectory<T: Scalar> {
    /// Layer states; the input log holds the total input `W x + d` terms
    /// other than the recurrent one.
    pub layers: Vec<Trajectory<T>>,
    /// Applied `u_i(t_k)` per layer (empty vectors where `p_i = 0`).
    pub controls: Vec<Vec<DVector<T>>>,
}

fn control_table<'a, T: Scalar>(h: &Hierarchy<T>, controls: &'a [ControlLaw<T>]) -> Result<Vec<Option<&'a ControlLaw<T>>>> {
    let mut table = vec![None; h.len()];
    for law in controls {
        let Some(net) = h.layers.get(law.layer) else {
            return Err(HsrError::InvalidInput(format!("control for missing layer {}", law.layer)));
        };
        if law.k.shape() != (net.p(), net.n()) {
            return Err(HsrError::DimensionMismatch(format!(
                "layer {}: K is {:?}, expected ({}, {})",
                law.layer,
                law.k.shape(),
                net.p(),
                net.n()
            )));
        }
        if law.feedforward_at(law.layer.checked_sub(1).map(|a| DVector::zeros(h.layer(a).n())).as_ref()).len() != net.p() {
            return Err(HsrError::DimensionMismatch(format!("layer {}: feedforward length", law.layer)));
        }
        table[law.layer] = Some(law);
    }
    Ok(table)
}

struct Stacked<'a, T: Scalar> {
    h: &'a Hierarchy<T>,
    laws: Vec<Option<&'a ControlLaw<T>>>,
    offsets: Vec<usize>,
    slow: Option<&'a Trajectory<T>>,
}

impl<T: Scalar> Stacked<'_, T> {
    fn split(&self, z: &DVector<T>, t: T) -> Vec<DVector<T>> {
        (0..self.h.len())
            .map(|i| match (i, self.slow) {
                (0, Some(tr)) => tr.interpolate(t),
                _ => z.rows(self.offsets[i], self.h.layer(i).n()).into_owned(),
            })
            .collect()
    }

    fn control(&self, i: usize, xs: &[DVector<T>]) -> DVector<T> {
        match self.laws[i] {
            Some(law) => law.evaluate(&xs[i], i.checked_sub(1).map(|a| &xs[a])),
            None => DVector::zeros(self.h.layer(i).p()),
        }
    }

    /// External drive of layer `i`: everything inside the clip except `W_ii x_i`.
    fn drive(&self, i: usize, xs: &[DVector<T>], u: &DVector<T>) -> DVector<T> {
        let net = self.h.layer(i);
        let mut d = net.c() + net.b() * u;
        if i > 0 {
            d += self.h.w_up(i - 1) * &xs[i - 1];
        }
        if i + 1 < self.h.len() {
            d += self.h.w_down(i) * &xs[i + 1];
        }
        d
    }

    fn field(&self, t: T, z: &DVector<T>) -> DVector<T> {
        let xs = self.split(z, t);
        let mut out = DVector::zeros(z.len());
        for i in 0..self.h.len() {
            if i == 0 && self.slow.is_some() {
                continue;
            }
            let u = self.control(i, &xs);
            let d = self.drive(i, &xs, &u);
            out.rows_mut(self.offsets[i], xs[i].len()).copy_from(&self.h.layer(i).rhs_unchecked(&xs[i], &d));
        }
        out
    }
}

/// Integrates all layers jointly with fixed-step RK4 on the stacked state.
/// Layers without a control law receive `u = 0`.
pub fn simulate_hierarchy<T: Scalar>(
    h: &Hierarchy<T>,
    controls: &[ControlLaw<T>],
    x0: &[DVector<T>],
    t_span: (T, T),
    dt: T,
) -> Result<HierarchyTrajectory<T>> {
    run(h, controls, x0, None, t_span, dt)
}

/// As [`simulate_hierarchy`], with the slowest layer replaced by a
/// prescribed trajectory (linearly interpolated between its samples).
pub fn simulate_hierarchy_driven<T: Scalar>(
    h: &Hierarchy<T>,
    controls: &[ControlLaw<T>],
    slow: &Trajectory<T>,
    x0: &[DVector<T>],
    t_span: (T, T),
    dt: T,
) -> Result<HierarchyTrajectory<T>> {
    if slow.dim() != h.layer(0).n() || slow.is_empty() {
        return Err(HsrError::DimensionMismatch("prescribed slow trajectory".into()));
    }
    let bound = slow.samples().iter().map(|x| x.amax()).fold(T::zero(), |a, b| a.max(b));
    log::debug!("prescribed slow input is bounded by {bound} on its samples");
    run(h, controls, x0, Some(slow), t_span, dt)
}

fn run<T: Scalar>(
    h: &Hierarchy<T>,
    controls: &[ControlLaw<T>],
    x0: &[DVector<T>],
    slow: Option<&Trajectory<T>>,
    t_span: (T, T),
    dt: T,
) -> Result<HierarchyTrajectory<T>> {
    if x0.len() != h.len() {
        return Err(HsrError::DimensionMismatch(format!("{} initial states for {} layers", x0.len(), h.len())));
    }
    check_step(dt, h.layer(h.len() - 1).tau())?;
    for (i, (net, x)) in h.layers.iter().zip(x0).enumerate() {
        if i == 0 && slow.is_some() {
            continue;
        }
        net.check_box(x)?;
    }
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(HsrError::InvalidInput("t_span end precedes start".into()));
    }
    let sys = Stacked { h, laws: control_table(h, controls)?, offsets: h.offsets(), slow };
    let mut z = DVector::zeros(*sys.offsets.last().unwrap());
    for (i, x) in x0.iter().enumerate() {
        z.rows_mut(sys.offsets[i], x.len()).copy_from(x);
    }
    if let Some(tr) = slow {
        z.rows_mut(0, h.layer(0).n()).copy_from(&tr.interpolate(t0));
    }

    let steps = step_count(t0, t1, dt);
    let n_layers = h.len();
    let mut states: Vec<Vec<DVector<T>>> = vec![Vec::with_capacity(steps + 1); n_layers];
    let mut drives: Vec<Vec<DVector<T>>> = vec![Vec::with_capacity(steps + 1); n_layers];
    let mut us: Vec<Vec<DVector<T>>> = vec![Vec::with_capacity(steps + 1); n_layers];
    let mut record = |z: &DVector<T>, t: T| {
        let xs = sys.split(z, t);
        for i in 0..n_layers {
            let u = sys.control(i, &xs);
            drives[i].push(sys.drive(i, &xs, &u));
            us[i].push(u);
            states[i].push(xs[i].clone());
        }
    };
    record(&z, t0);
    let field = |t: T, z: &DVector<T>| sys.field(t, z);
    for k in 0..steps {
        let t = t0 + dt * lit::<T>(k as f64);
        let mut next = rk4_step(&field, t, &z, dt);
        for i in 0..n_layers {
            let net = h.layer(i);
            let seg = next.rows(sys.offsets[i], net.n()).into_owned();
            next.rows_mut(sys.offsets[i], net.n()).copy_from(&clip(&seg, net.m()));
        }
        if let Some(tr) = slow {
            next.rows_mut(0, h.layer(0).n()).copy_from(&tr.interpolate(t + dt));
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(HsrError::SimulationDiverged(format!("non-finite state at step {k}")));
        }
        z = next;
        record(&z, t + dt);
    }
    let layers = states
        .into_iter()
        .zip(drives)
        .map(|(s, d)| Trajectory::new(t0, dt, s).with_inputs(d))
        .collect();
    Ok(HierarchyTrajectory { layers, controls: us })
}

/// `(0_r, h_i^+(W_{i,i-1}^{++} x_{i-1}^+(t) + c_i^+))` along the trajectory of
/// the layer above.
pub fn reference_trajectory<T: Scalar>(
    h: &Hierarchy<T>,
    map: &PiecewiseAffineMap<T>,
    upper: &Trajectory<T>,
    layer: usize,
) -> Result<Trajectory<T>> {
    if layer == 0 || layer >= h.len() {
        return Err(HsrError::InvalidInput(format!("no reference for layer {layer}")));
    }
    let net = h.layer(layer);
    let above = h.layer(layer - 1);
    let w = h.up_pp(layer - 1);
    let c = net.c_plus();
    let samples = upper
        .samples()
        .iter()
        .map(|x| {
            let xp = x.rows(above.r(), above.n() - above.r()).into_owned();
            let plus = map.eval(&(&w * xp + &c))?;
            let mut full = DVector::zeros(net.n());
            full.rows_mut(net.r(), plus.len()).copy_from(&plus);
            Ok(full)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(upper.t0(), upper.dt(), samples))
}

/// Sup over samples in `window` of `||traj - reference||_2`.
pub fn tracking_error<T: Scalar>(traj: &Trajectory<T>, reference: &Trajectory<T>, window: (T, T)) -> Result<T> {
    if traj.len() != reference.len() || traj.dim() != reference.dim() {
        return Err(HsrError::DimensionMismatch("trajectory and reference differ in shape".into()));
    }
    Ok(traj
        .window_indices(window)
        .map(|k| (&traj.samples()[k] - &reference.samples()[k]).norm())
        .fold(T::zero(), |a, b| a.max(b)))
}

/// Sup over samples in `window` of the 2-norm of the inhibited nodes.
pub fn inhibited_residual<T: Scalar>(traj: &Trajectory<T>, r: usize, window: (T, T)) -> T {
    traj.window_indices(window)
        .map(|k| traj.samples()[k].rows(0, r).norm())
        .fold(T::zero(), |a, b| a.max(b))
}

/// Reduced model of the slowest layer with layer 2 replaced by its
/// recruitment map `h_2^+`.
pub fn rom_simulate<T: Scalar>(
    h: &Hierarchy<T>,
    map2: &PiecewiseAffineMap<T>,
    x0: &DVector<T>,
    t_span: (T, T),
    dt: T,
) -> Result<Trajectory<T>> {
    let net = h.layer(0);
    check_step(dt, net.tau())?;
    net.check_box(x0)?;
    if h.len() < 2 {
        return Err(HsrError::InvalidHierarchy("the reduced model needs at least two layers".into()));
    }
    let (w12, w21, c2) = (h.down_pp(0), h.up_pp(0), h.layer(1).c_plus());
    // probe once so map failures surface as errors instead of inside the loop
    map2.eval(&(&w21 * x0 + &c2))?;
    let field = |_t: T, x: &DVector<T>| {
        let below = map2.eval(&(&w21 * x + &c2)).unwrap_or_else(|_| DVector::zeros(c2.len()));
        net.rhs_unchecked(x, &(net.c() + &w12 * below))
    };
    let (t0, t1) = t_span;
    let steps = step_count(t0, t1, dt);
    let mut x = x0.clone();
    let mut samples = vec![x.clone()];
    for k in 0..steps {
        let t = t0 + dt * lit::<T>(k as f64);
        x = clip(&rk4_step(&field, t, &x, dt), net.m());
        samples.push(x.clone());
    }
    Ok(Trajectory::new(t0, dt, samples))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint<T: Scalar> {
    pub eps: T,
    pub dt: T,
    /// Recruited-partition tracking error for layers `1..N` (index 0 unused, zero).
    pub recruited_error: Vec<T>,
    /// Inhibited-partition sup-norm for layers `1..N` (index 0 unused, zero).
    pub inhibited_residual: Vec<T>,
    /// `sup_{[0, t_end]} ||x_1 - x_1^ROM||`.
    pub rom_error: T,
    /// Smallest applied control entry over the run.
    pub min_control: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingReport<T: Scalar> {
    pub window: (T, T),
    pub points: Vec<SweepPoint<T>>,
    /// Per layer, whether the recruited error strictly decreases along the sweep.
    pub recruited_decreasing: Vec<bool>,
    pub inhibited_decreasing: Vec<bool>,
    pub rom_decreasing: bool,
}

fn strictly_decreasing<T: Scalar>(v: impl Iterator<Item = T>) -> bool {
    let v: Vec<T> = v.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

/// Runs the hierarchy at each timescale ratio in `eps_list` (uniform across
/// layers, `tau_1` fixed) over `[0, window.1]` with `dt = tau_N / 100`, and
/// reports tracking errors on `window`.
pub fn epsilon_sweep<T: Scalar>(
    h: &Hierarchy<T>,
    controls: &[ControlLaw<T>],
    eps_list: &[T],
    window: Option<(T, T)>,
    x0: &[DVector<T>],
) -> Result<TrackingReport<T>> {
    if eps_list.is_empty() {
        return Err(HsrError::InvalidInput("empty epsilon list".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(HsrError::InvalidInput("epsilon list must be strictly decreasing".into()));
    }
    let tau1 = h.layer(0).tau();
    let window = window.unwrap_or((tau1 * lit(2.0), tau1 * lit(10.0)));
    if !(window.0 > T::zero() && window.1 > window.0) {
        return Err(HsrError::InvalidInput("window must satisfy 0 < start < end".into()));
    }
    let cert = certify_hierarchy(h)?;
    let maps = cert.maps;
    if maps.iter().skip(1).any(Option::is_none) {
        let rho = cert.layers.iter().filter_map(|l| l.certificate.as_ref()).map(|c| c.rho).fold(T::zero(), |a, b| a.max(b));
        return Err(HsrError::NotCertified { rho: crate::scalar::to_f64(rho) });
    }
    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let hr = h.rescaled(eps)?;
        let dt = hr.layer(hr.len() - 1).tau() / lit(100.0);
        let run = simulate_hierarchy(&hr, controls, x0, (T::zero(), window.1), dt)?;
        let mut recruited_error = vec![T::zero(); h.len()];
        let mut inhibited = vec![T::zero(); h.len()];
        for i in 1..h.len() {
            let reference = reference_trajectory(&hr, maps[i].as_ref().unwrap(), &run.layers[i - 1], i)?;
            let plus = hr.layer(i).plus();
            recruited_error[i] = tracking_error(&run.layers[i].select(plus.clone()), &reference.select(plus), window)?;
            inhibited[i] = inhibited_residual(&run.layers[i], hr.layer(i).r(), window);
        }
        let rom_error = match maps.get(1).and_then(Option::as_ref) {
            Some(m2) => {
                let rt = rom_simulate(h, m2, &x0[0], (T::zero(), window.1), dt)?;
                run.layers[0]
                    .samples()
                    .iter()
                    .zip(rt.samples())
                    .map(|(x, y)| (x - y).norm())
                    .fold(T::zero(), |a, b| a.max(b))
            }
            None => T::zero(),
        };
        let min_control = run
            .controls
            .iter()
            .flatten()
            .flat_map(|u| u.iter().copied())
            .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b));
        log::info!("eps = {eps}: recruited errors {recruited_error:?}");
        points.push(SweepPoint { eps, dt, recruited_error, inhibited_residual: inhibited, rom_error, min_control });
    }
    let recruited_decreasing = (0..h.len())
        .map(|i| i > 0 && strictly_decreasing(points.iter().map(|p| p.recruited_error[i])))
        .collect();
    let inhibited_decreasing = (0..h.len())
        .map(|i| i > 0 && strictly_decreasing(points.iter().map(|p| p.inhibited_residual[i])))
        .collect();
    let rom_decreasing = strictly_decreasing(points.iter().map(|p| p.rom_error));
    Ok(TrackingReport { window, points, recruited_decreasing, inhibited_decreasing, rom_decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::equilibrium_map;
    use crate::ltn::{simulate, Ceiling};
    use approx::assert_abs_diff_eq;

    fn scalar(w: f64, c: f64, tau: f64) -> LtNetwork<f64> {
        LtNetwork::new(
            DMatrix::from_element(1, 1, w),
            DVector::from_element(1, c),
            vec![Ceiling::Unbounded],
            tau,
            DMatrix::zeros(1, 0),
            0,
        )
        .unwrap()
    }

    fn chain() -> Hierarchy<f64> {
        Hierarchy::new(
            vec![scalar(0.5, 1.0, 1.0), scalar(0.01, 0.2, 0.1)],
            vec![DMatrix::zeros(1, 1)],
            vec![DMatrix::from_element(1, 1, 0.5)],
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let a = scalar(0.0, 0.0, 1.0);
        assert!(Hierarchy::new(vec![a.clone(), a.clone()], vec![DMatrix::zeros(1, 1)], vec![DMatrix::zeros(1, 1)]).is_err());
        assert!(Hierarchy::new(vec![a.clone()], vec![DMatrix::zeros(1, 1)], vec![]).is_err());
        let h = chain();
        assert_eq!(h.epsilons(), vec![0.1]);
        assert_abs_diff_eq!(h.rescaled(0.25).unwrap().layer(1).tau(), 0.25);
    }

    #[test]
    fn single_layer_matches_simulate_exactly() {
        let net = LtNetwork::new(
            DMatrix::from_row_slice(2, 2, &[0.1, -0.4, 0.6, 0.2]),
            DVector::from_vec(vec![1.0, 0.5]),
            vec![Ceiling::Finite(2.0), Ceiling::Unbounded],
            1.0,
            DMatrix::zeros(2, 0),
            0,
        )
        .unwrap();
        let x0 = DVector::from_vec(vec![0.3, 0.0]);
        let single = simulate(&net, &x0, |_| DVector::zeros(2), (0.0, 3.0), 0.02).unwrap();
        let h = Hierarchy::new(vec![net], vec![], vec![]).unwrap();
        let joint = simulate_hierarchy(&h, &[], &[x0], (0.0, 3.0), 0.02).unwrap();
        assert_eq!(joint.layers[0].samples(), single.samples());
    }

    #[test]
    fn constant_upper_gives_constant_reference() {
        let h = chain();
        let map = equilibrium_map(&h.layer(1).w_pp(), h.layer(1).m_plus()).unwrap();
        let upper = Trajectory::new(0.0, 0.1, vec![DVector::from_element(1, 2.0); 5]);
        let r = reference_trajectory(&h, &map, &upper, 1).unwrap();
        for x in r.samples() {
            assert_abs_diff_eq!(x[0], (0.5 * 2.0 + 0.2) / 0.99, epsilon = 1e-12);
        }
        assert_eq!(tracking_error(&r, &r, (0.0, 0.4)).unwrap(), 0.0);
    }

    #[test]
    fn sweep_on_scalar_chain_converges() {
        let h = chain();
        let x0 = [DVector::zeros(1), DVector::zeros(1)];
        let rep = epsilon_sweep(&h, &[], &[0.5, 0.1, 0.02], None, &x0).unwrap();
        assert!(rep.recruited_decreasing[1], "{rep:?}");
        // no feedback from below: the reduced model is the isolated slow layer
        assert!(rep.points.iter().all(|p| p.rom_error < 1e-9));
    }

    #[test]
    fn prescribed_slow_layer() {
        let h = chain();
        let slow = Trajectory::new(0.0, 0.5, (0..=10).map(|k| DVector::from_element(1, k as f64 * 0.1)).collect());
        let run = simulate_hierarchy_driven(&h, &[], &slow, &[DVector::zeros(1), DVector::zeros(1)], (0.0, 5.0), 0.005)
            .unwrap();
        assert_abs_diff_eq!(run.layers[0].last()[0], 1.0, epsilon = 1e-12);
        let map = equilibrium_map(&h.layer(1).w_pp(), h.layer(1).m_plus()).unwrap();
        let reference = reference_trajectory(&h, &map, &run.layers[0], 1).unwrap();
        assert!(tracking_error(&run.layers[1], &reference, (1.0, 5.0)).unwrap() < 0.02);
    }
}
