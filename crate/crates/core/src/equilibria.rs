//! Equilibrium maps of linear-threshold layers as explicit piecewise-affine
//! functions.
//!
//! For a switching pattern `sigma` (one regime per node) the equilibrium
//! equation `x = [W x + d]_0^m` becomes linear. Solving it yields an affine
//! candidate `x = F d + f` that is valid on the polyhedron where the regime
//! conditions on `z = W x + d` hold: `z_i <= 0` for zero nodes,
//! `0 <= z_i <= m_i` for linear nodes and `z_i >= m_i` for saturated nodes.
//! Enumerating every pattern and dropping empty or singular ones gives the
//! whole map.
//!
//! The same construction, applied to `x = [W1 x + W2 h(W3 x + cbar) + c']`
//! piece by piece of an inner map `h`, composes maps across layers.

use crate::error::{HsrError, Result};
use crate::lp::chebyshev_radius;
use crate::ltn::{clip, Ceiling};
use crate::scalar::{eps, lit, to_f64, Scalar};
use crate::stability::{ges_certificate, weighted_norm};
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::str::FromStr;

/// Largest layer size for which patterns are enumerated (3^12 patterns).
pub const ENUMERATION_LIMIT: usize = 12;

/// Operating regime of one node. Ordered `Zero < Linear < Saturated`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    Zero,
    Linear,
    Saturated,
}

impl Regime {
    fn symbol(self) -> char {
        match self {
            Regime::Zero => 'z',
            Regime::Linear => 'l',
            Regime::Saturated => 's',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwitchingPattern(Vec<Regime>);

impl SwitchingPattern {
    /// Builds a pattern, rejecting `Saturated` on unbounded nodes.
    pub fn new<T: Scalar>(regimes: Vec<Regime>, m: &[Ceiling<T>]) -> Result<Self> {
        if regimes.len() != m.len() {
            return Err(HsrError::DimensionMismatch(format!(
                "pattern has {} entries, expected {}",
                regimes.len(),
                m.len()
            )));
        }
        if let Some(i) = regimes
            .iter()
            .zip(m)
            .position(|(r, c)| *r == Regime::Saturated && !c.is_finite())
        {
            return Err(HsrError::InvalidInput(format!(
                "node {i} cannot saturate: its ceiling is unbounded"
            )));
        }
        Ok(Self(regimes))
    }

    pub fn uniform(n: usize, regime: Regime) -> Self {
        Self(vec![regime; n])
    }

    pub fn regimes(&self) -> &[Regime] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All admissible patterns in lexicographic order.
    fn enumerate<T: Scalar>(m: &[Ceiling<T>]) -> impl Iterator<Item = SwitchingPattern> + '_ {
        let n = m.len();
        let total = 3usize.pow(n as u32);
        (0..total).filter_map(move |mut code| {
            let mut regimes = vec![Regime::Zero; n];
            for i in (0..n).rev() {
                regimes[i] = match code % 3 {
                    0 => Regime::Zero,
                    1 => Regime::Linear,
                    _ => Regime::Saturated,
                };
                code /= 3;
            }
            let ok = regimes
                .iter()
                .zip(m)
                .all(|(r, c)| *r != Regime::Saturated || c.is_finite());
            ok.then_some(SwitchingPattern(regimes))
        })
    }
}

impl fmt::Display for SwitchingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.0 {
            write!(f, "{}", r.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SwitchingPattern {
    type Err = HsrError;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                'z' => Ok(Regime::Zero),
                'l' => Ok(Regime::Linear),
                's' => Ok(Regime::Saturated),
                other => Err(HsrError::InvalidInput(format!("unknown regime `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(SwitchingPattern)
    }
}

/// Piece identifier: the chain of patterns from the innermost map outwards.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PieceLabel(Vec<SwitchingPattern>);

impl PieceLabel {
    pub fn patterns(&self) -> &[SwitchingPattern] {
        &self.0
    }

    fn extended(&self, sigma: SwitchingPattern) -> Self {
        let mut v = self.0.clone();
        v.push(sigma);
        Self(v)
    }
}

impl fmt::Display for PieceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("/")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PieceLabel {
    type Err = HsrError;
    fn from_str(s: &str) -> Result<Self> {
        s.split('/').map(str::parse).collect::<Result<Vec<_>>>().map(PieceLabel)
    }
}

/// Polyhedron `{d : G d + g >= 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region<T: Scalar> {
    pub g_mat: DMatrix<T>,
    pub g_off: DVector<T>,
}

fn member_tol<T: Scalar>() -> T {
    lit::<T>(1e-9).max(eps::<T>() * lit(1e3))
}

fn radius_tol<T: Scalar>() -> T {
    eps::<T>().sqrt()
}

impl<T: Scalar> Region<T> {
    /// Membership up to a relative tolerance of 1e-9.
    pub fn contains(&self, d: &DVector<T>) -> bool {
        let tol = member_tol::<T>();
        (0..self.g_mat.nrows()).all(|i| {
            let mut v = self.g_off[i];
            let mut scale = T::one() + self.g_off[i].abs();
            for j in 0..d.len() {
                let t = self.g_mat[(i, j)] * d[j];
                v += t;
                scale += t.abs();
            }
            v >= -tol * scale
        })
    }

    /// True when the region contains a ball of positive radius.
    pub fn has_interior(&self) -> bool {
        chebyshev_radius(&self.g_mat, &self.g_off).is_some_and(|r| r > radius_tol::<T>())
    }
}

/// One affine piece `d -> F d + f` valid on its region.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece<T: Scalar> {
    pub label: PieceLabel,
    pub gain: DMatrix<T>,
    pub offset: DVector<T>,
    pub region: Region<T>,
}

impl<T: Scalar> AffinePiece<T> {
    pub fn value(&self, d: &DVector<T>) -> DVector<T> {
        &self.gain * d + &self.offset
    }
}

/// Result of solving one switching pattern.
#[derive(Clone, Debug, PartialEq)]
pub enum PatternPiece<T: Scalar> {
    Piece(AffinePiece<T>),
    /// `I - Sigma_l W` is not invertible for this pattern.
    Singular,
}

/// A piecewise-affine function given by a finite list of pieces, sorted by
/// label so that evaluation ties resolve to the lexicographically smallest.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseAffineMap<T: Scalar> {
    input_dim: usize,
    output_dim: usize,
    pieces: Vec<AffinePiece<T>>,
}

impl<T: Scalar> PiecewiseAffineMap<T> {
    pub fn from_pieces(input_dim: usize, output_dim: usize, mut pieces: Vec<AffinePiece<T>>) -> Result<Self> {
        for p in &pieces {
            if p.gain.shape() != (output_dim, input_dim)
                || p.offset.len() != output_dim
                || p.region.g_mat.ncols() != input_dim
                || p.region.g_mat.nrows() != p.region.g_off.len()
            {
                return Err(HsrError::DimensionMismatch(format!("piece {} has inconsistent shapes", p.label)));
            }
        }
        pieces.sort_by(|a, b| a.label.cmp(&b.label));
        Ok(Self { input_dim, output_dim, pieces })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }
    pub fn pieces(&self) -> &[AffinePiece<T>] {
        &self.pieces
    }

    /// Value of the map at `d`, taken from the first covering piece in label order.
    pub fn eval(&self, d: &DVector<T>) -> Result<DVector<T>> {
        if d.len() != self.input_dim {
            return Err(HsrError::DimensionMismatch(format!(
                "map input has dimension {}, got {}",
                self.input_dim,
                d.len()
            )));
        }
        self.pieces
            .iter()
            .find(|p| p.region.contains(d))
            .map(|p| p.value(d))
            .ok_or(HsrError::NoCoveringPiece { feasible: 0 })
    }

    /// Every piece covering `d` with its value.
    pub fn feasible_values(&self, d: &DVector<T>) -> Vec<(&PieceLabel, DVector<T>)> {
        self.pieces
            .iter()
            .filter(|p| p.region.contains(d))
            .map(|p| (&p.label, p.value(d)))
            .collect()
    }

    /// Largest spread between values of pieces covering `d`; zero for a
    /// single-valued map.
    pub fn value_spread(&self, d: &DVector<T>) -> T {
        let vals = self.feasible_values(d);
        let mut worst = T::zero();
        for (_, v) in vals.iter().skip(1) {
            worst = worst.max((v - &vals[0].1).amax());
        }
        worst
    }
}

/// Solves pattern `sigma` of `x = [w_eff x + e + d]_0^m` as a function of `d`.
fn regime_piece<T: Scalar>(
    w_eff: &DMatrix<T>,
    e: &DVector<T>,
    m: &[Ceiling<T>],
    sigma: &SwitchingPattern,
) -> Option<(DMatrix<T>, DVector<T>, DMatrix<T>, DVector<T>)> {
    let n = m.len();
    let regimes = sigma.regimes();
    let mut lin = DMatrix::<T>::zeros(n, n);
    let mut sat = DVector::<T>::zeros(n);
    for i in 0..n {
        match regimes[i] {
            Regime::Linear => lin[(i, i)] = T::one(),
            Regime::Saturated => sat[i] = m[i].finite().unwrap_or_else(T::zero),
            Regime::Zero => {}
        }
    }
    let system = DMatrix::<T>::identity(n, n) - &lin * w_eff;
    let inv = system.clone().try_inverse()?;
    let cond = system.abs().row_sum().amax() * inv.abs().row_sum().amax();
    if !(cond < T::one() / (eps::<T>() * lit(1e4))) {
        return None;
    }
    let gain = &inv * &lin;
    let offset = &inv * (sat + &lin * e);

    // z = A d + b
    let a = w_eff * &gain + DMatrix::identity(n, n);
    let b = w_eff * &offset + e;
    let mut rows: Vec<(nalgebra::RowDVector<T>, T)> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let ai = a.row(i).into_owned();
        match regimes[i] {
            Regime::Zero => rows.push((-ai, -b[i])),
            Regime::Linear => {
                rows.push((ai.clone(), b[i]));
                if let Some(mi) = m[i].finite() {
                    rows.push((-ai, mi - b[i]));
                }
            }
            Regime::Saturated => rows.push((ai, b[i] - m[i].finite().unwrap_or_else(T::zero))),
        }
    }
    let g_mat = DMatrix::from_rows(&rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>());
    let g_off = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    Some((gain, offset, g_mat, g_off))
}

fn check_square<T: Scalar>(w: &DMatrix<T>, m: &[Ceiling<T>]) -> Result<usize> {
    let n = w.nrows();
    if w.ncols() != n || m.len() != n {
        return Err(HsrError::DimensionMismatch(format!(
            "W is {}x{} with {} ceilings",
            w.nrows(),
            w.ncols(),
            m.len()
        )));
    }
    Ok(n)
}

/// Affine piece of the equilibrium map of `(w, m)` for one pattern.
///
/// The region may be empty; [`equilibrium_map`] filters those out.
pub fn piece_for_pattern<T: Scalar>(
    w: &DMatrix<T>,
    m: &[Ceiling<T>],
    sigma: &SwitchingPattern,
) -> Result<PatternPiece<T>> {
    let n = check_square(w, m)?;
    if sigma.len() != n {
        return Err(HsrError::DimensionMismatch("pattern length".into()));
    }
    Ok(match regime_piece(w, &DVector::zeros(n), m, sigma) {
        Some((gain, offset, g_mat, g_off)) => PatternPiece::Piece(AffinePiece {
            label: PieceLabel(vec![sigma.clone()]),
            gain,
            offset,
            region: Region { g_mat, g_off },
        }),
        None => PatternPiece::Singular,
    })
}

/// Equilibrium map `d -> {x : x = [W x + d]_0^m}` as a piecewise-affine map.
pub fn equilibrium_map<T: Scalar>(w: &DMatrix<T>, m: &[Ceiling<T>]) -> Result<PiecewiseAffineMap<T>> {
    let n = check_square(w, m)?;
    if n > ENUMERATION_LIMIT {
        return Err(HsrError::EnumerationLimit { n, limit: ENUMERATION_LIMIT });
    }
    let mut pieces = Vec::new();
    for sigma in SwitchingPattern::enumerate(m) {
        match piece_for_pattern(w, m, &sigma)? {
            PatternPiece::Piece(p) if p.region.has_interior() => pieces.push(p),
            PatternPiece::Piece(_) => {}
            PatternPiece::Singular => log::warn!("pattern {sigma} is singular; skipped"),
        }
    }
    PiecewiseAffineMap::from_pieces(n, n, pieces)
}

/// Fixed-point iteration `x <- [W x + d]_0^m` from the origin.
///
/// Requires a passing contraction certificate for `|W|`. Stops when the
/// iterate is within `tol` of the fixed point in a weighted 1-norm that
/// dominates the max-norm.
pub fn solve_equilibrium_iterative<T: Scalar>(
    w: &DMatrix<T>,
    m: &[Ceiling<T>],
    d: &DVector<T>,
    tol: T,
) -> Result<DVector<T>> {
    let n = check_square(w, m)?;
    if d.len() != n {
        return Err(HsrError::DimensionMismatch("input length".into()));
    }
    let cert = ges_certificate(
        w,
        &DMatrix::zeros(n, 0),
        &DMatrix::zeros(0, n),
        &DMatrix::zeros(0, 0),
        T::one(),
    )?;
    if !cert.pass {
        return Err(HsrError::NotCertified { rho: to_f64(cert.rho) });
    }
    let min_alpha = cert.alpha.iter().fold(T::max_value().unwrap_or(T::one()), |a, &b| a.min(b));
    let alpha = &cert.alpha / min_alpha;
    let rho = cert.rho_regularized;
    let stop = if rho > T::zero() { tol * (T::one() - rho) / rho } else { T::max_value().unwrap_or(T::one()) };

    let mut x = DVector::zeros(n);
    for _ in 0..1_000_000 {
        let next = clip(&(w * &x + d), m);
        let change = weighted_norm(&alpha, &(&next - &x));
        x = next;
        if change <= stop || change == T::zero() {
            return Ok(x);
        }
    }
    log::warn!("fixed-point iteration hit its cap before reaching tol");
    Ok(x)
}

/// Equilibrium map of `x = [W1 x + W2 h(W3 x + cbar) + c']_0^m` as a
/// function of `c'`, where `h` is `inner`.
///
/// Uniqueness is certified through `rho(|W1| + |W2| Fbar |W3|) < 1` with
/// `Fbar` the max-gain matrix of `inner`.
pub fn compose_maps<T: Scalar>(
    inner: &PiecewiseAffineMap<T>,
    w1: &DMatrix<T>,
    w2: &DMatrix<T>,
    w3: &DMatrix<T>,
    cbar: &DVector<T>,
    m: &[Ceiling<T>],
) -> Result<PiecewiseAffineMap<T>> {
    let n = check_square(w1, m)?;
    if w2.shape() != (n, inner.output_dim())
        || w3.shape() != (inner.input_dim(), n)
        || cbar.len() != inner.input_dim()
    {
        return Err(HsrError::DimensionMismatch(format!(
            "compose: W2 {:?}, W3 {:?}, cbar {} against inner map {}->{} and n = {n}",
            w2.shape(),
            w3.shape(),
            cbar.len(),
            inner.input_dim(),
            inner.output_dim()
        )));
    }
    if n > ENUMERATION_LIMIT {
        return Err(HsrError::EnumerationLimit { n, limit: ENUMERATION_LIMIT });
    }
    let fbar = max_gain_matrix(inner);
    let cert = ges_certificate(w1, w2, w3, &fbar, T::one())?;
    if !cert.pass {
        return Err(HsrError::UniquenessNotCertified { rho: to_f64(cert.rho) });
    }

    let mut pieces = Vec::new();
    for lam in inner.pieces() {
        let w_eff = w1 + w2 * &lam.gain * w3;
        let e = w2 * (&lam.gain * cbar + &lam.offset);
        let inner_rows = &lam.region.g_mat * w3;
        for sigma in SwitchingPattern::enumerate(m) {
            let Some((gain, offset, g_sig, o_sig)) = regime_piece(&w_eff, &e, m, &sigma) else {
                log::warn!("composite pattern {}/{sigma} is singular; skipped", lam.label);
                continue;
            };
            // inner validity: G_l (W3 (F' c' + f') + cbar) + g_l >= 0
            let g_lam = &inner_rows * &gain;
            let o_lam = &inner_rows * &offset + &lam.region.g_mat * cbar + &lam.region.g_off;
            let g_mat = stack_rows(&g_sig, &g_lam);
            let g_off = DVector::from_iterator(
                o_sig.len() + o_lam.len(),
                o_sig.iter().chain(o_lam.iter()).copied(),
            );
            let region = Region { g_mat, g_off };
            if region.has_interior() {
                pieces.push(AffinePiece { label: lam.label.extended(sigma), gain, offset, region });
            }
        }
    }
    PiecewiseAffineMap::from_pieces(n, n, pieces)
}

fn stack_rows<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

/// Global Lipschitz constant: the largest spectral norm of a piece gain.
pub fn lipschitz_constant<T: Scalar>(map: &PiecewiseAffineMap<T>) -> T {
    map.pieces()
        .iter()
        .filter(|p| p.gain.nrows() > 0 && p.gain.ncols() > 0)
        .map(|p| p.gain.clone().svd(false, false).singular_values.max())
        .fold(T::zero(), |a, b| a.max(b))
}

/// Elementwise maximum of `|F|` over all pieces.
pub fn max_gain_matrix<T: Scalar>(map: &PiecewiseAffineMap<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(map.output_dim(), map.input_dim());
    for p in map.pieces() {
        out.zip_apply(&p.gain, |o: &mut T, g: T| *o = o.max(g.abs()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_map(w: f64, m: Ceiling<f64>) -> PiecewiseAffineMap<f64> {
        equilibrium_map(&DMatrix::from_element(1, 1, w), &[m]).unwrap()
    }

    #[test]
    fn all_linear_with_zero_weights_is_identity() {
        let m = [Ceiling::Finite(2.0), Ceiling::Unbounded];
        let sigma = SwitchingPattern::uniform(2, Regime::Linear);
        let PatternPiece::Piece(p) = piece_for_pattern(&DMatrix::zeros(2, 2), &m, &sigma).unwrap() else {
            panic!("singular")
        };
        assert_eq!(p.gain, DMatrix::identity(2, 2));
        assert_eq!(p.offset, DVector::zeros(2));
        assert!(p.region.contains(&DVector::from_vec(vec![1.0, 5.0])));
        assert!(!p.region.contains(&DVector::from_vec(vec![3.0, 5.0])));
        assert!(!p.region.contains(&DVector::from_vec(vec![1.0, -1.0])));
    }

    #[test]
    fn all_zero_pattern_region_is_negative_orthant() {
        let w = DMatrix::from_row_slice(2, 2, &[0.3, -0.7, 1.2, 0.1]);
        let m = [Ceiling::Unbounded; 2];
        let PatternPiece::Piece(p) =
            piece_for_pattern(&w, &m, &SwitchingPattern::uniform(2, Regime::Zero)).unwrap()
        else {
            panic!()
        };
        assert_eq!(p.gain, DMatrix::zeros(2, 2));
        assert_eq!(p.offset, DVector::zeros(2));
        assert!(p.region.contains(&DVector::from_vec(vec![-1.0, 0.0])));
        assert!(!p.region.contains(&DVector::from_vec(vec![-1.0, 0.1])));
    }

    #[test]
    fn saturated_scalar_piece() {
        let m = [Ceiling::Finite(1.0)];
        let sigma = SwitchingPattern::new(vec![Regime::Saturated], &m).unwrap();
        let PatternPiece::Piece(p) = piece_for_pattern(&DMatrix::zeros(1, 1), &m, &sigma).unwrap() else {
            panic!()
        };
        assert_eq!(p.gain[(0, 0)], 0.0);
        assert_eq!(p.offset[0], 1.0);
        assert!(p.region.contains(&DVector::from_element(1, 1.0)));
        assert!(!p.region.contains(&DVector::from_element(1, 0.9)));
    }

    #[test]
    fn saturation_rejected_for_unbounded_nodes() {
        assert!(SwitchingPattern::new(vec![Regime::Saturated], &[Ceiling::<f64>::Unbounded]).is_err());
    }

    #[test]
    fn singular_pattern_is_reported() {
        // x = x + d in the linear regime has no unique solution
        let out = piece_for_pattern(
            &DMatrix::from_element(1, 1, 1.0),
            &[Ceiling::Unbounded],
            &SwitchingPattern::uniform(1, Regime::Linear),
        )
        .unwrap();
        assert_eq!(out, PatternPiece::Singular);
    }

    #[test]
    fn decoupled_map_is_clip() {
        let m = [Ceiling::Finite(1.5), Ceiling::Unbounded, Ceiling::Finite(0.5)];
        let map = equilibrium_map(&DMatrix::zeros(3, 3), &m).unwrap();
        for d in [[-1.0, 2.0, 0.2], [3.0, -0.5, 4.0], [0.7, 0.0, 0.5]] {
            let d = DVector::from_row_slice(&d);
            assert_abs_diff_eq!(map.eval(&d).unwrap(), clip(&d, &m), epsilon = 1e-12);
        }
    }

    #[test]
    fn case_study_scalar_map() {
        let map = scalar_map(0.01, Ceiling::Unbounded);
        assert_eq!(map.eval(&DVector::from_element(1, -1.0)).unwrap()[0], 0.0);
        let v = map.eval(&DVector::from_element(1, 2.0)).unwrap()[0];
        assert_abs_diff_eq!(v, 2.0 / 0.99, epsilon = 1e-12);
        assert_abs_diff_eq!(lipschitz_constant(&map), 1.0 / 0.99, epsilon = 1e-12);
        assert_abs_diff_eq!(max_gain_matrix(&map)[(0, 0)], 1.0 / 0.99, epsilon = 1e-12);
    }

    #[test]
    fn boundary_values_agree() {
        let map = scalar_map(0.01, Ceiling::Unbounded);
        let d = DVector::from_element(1, 0.0);
        let vals = map.feasible_values(&d);
        assert_eq!(vals.len(), 2);
        assert!(map.value_spread(&d) < 1e-12);
        // tie goes to the Zero piece
        assert_eq!(vals[0].0.to_string(), "z");
    }

    #[test]
    fn unbounded_clip_has_unit_lipschitz() {
        let map = equilibrium_map(&DMatrix::<f64>::zeros(2, 2), &[Ceiling::Unbounded; 2]).unwrap();
        assert_abs_diff_eq!(lipschitz_constant(&map), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn iterative_solver_examples() {
        let m = [Ceiling::Unbounded];
        let x = solve_equilibrium_iterative(&DMatrix::from_element(1, 1, 0.5), &m, &DVector::from_element(1, 1.0), 1e-13)
            .unwrap();
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-12);
        let m2 = [Ceiling::Finite(1.0), Ceiling::Unbounded];
        let d = DVector::from_vec(vec![3.0, -2.0]);
        let x = solve_equilibrium_iterative(&DMatrix::zeros(2, 2), &m2, &d, 1e-13).unwrap();
        assert_eq!(x, DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(
            solve_equilibrium_iterative(&DMatrix::from_element(1, 1, 1.5), &m, &DVector::from_element(1, 1.0), 1e-12),
            Err(HsrError::NotCertified { .. })
        ));
    }

    #[test]
    fn enumeration_limit() {
        let n = ENUMERATION_LIMIT + 1;
        let err = equilibrium_map(&DMatrix::<f64>::zeros(n, n), &vec![Ceiling::Unbounded; n]).unwrap_err();
        assert!(matches!(err, HsrError::EnumerationLimit { .. }));
    }

    #[test]
    fn compose_with_zero_coupling_matches_plain_map() {
        let inner = scalar_map(0.01, Ceiling::Unbounded);
        let w1 = DMatrix::from_row_slice(2, 2, &[0.2, -0.4, 0.3, 0.1]);
        let m = [Ceiling::Finite(3.0), Ceiling::Unbounded];
        let composite =
            compose_maps(&inner, &w1, &DMatrix::zeros(2, 1), &DMatrix::zeros(1, 2), &DVector::zeros(1), &m).unwrap();
        let plain = equilibrium_map(&w1, &m).unwrap();
        for d in [[0.5, 1.0], [-1.0, 2.0], [4.0, 4.0], [2.0, -3.0]] {
            let d = DVector::from_row_slice(&d);
            assert_abs_diff_eq!(composite.eval(&d).unwrap(), plain.eval(&d).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn compose_rejects_uncertified_coupling() {
        let inner = scalar_map(0.5, Ceiling::Unbounded);
        let err = compose_maps(
            &inner,
            &DMatrix::from_element(1, 1, 0.9),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::zeros(1),
            &[Ceiling::Unbounded],
        )
        .unwrap_err();
        assert!(matches!(err, HsrError::UniquenessNotCertified { .. }));
    }

    #[test]
    fn labels_round_trip_through_strings() {
        let l: PieceLabel = "zl/lls".parse().unwrap();
        assert_eq!(l.to_string(), "zl/lls");
        assert!("zq".parse::<PieceLabel>().is_err());
    }
}
