//! Dense two-phase simplex for the small feasibility problems that arise in
//! region pruning and inhibition synthesis.
//!
//! Problems have at most a few dozen variables, so a tableau with Bland's
//! anti-cycling rule is sufficient.

use crate::scalar::{eps, lit, Scalar};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

fn pivot_tol<T: Scalar>() -> T {
    eps::<T>().powf(lit(0.7))
}

struct Tableau<T: Scalar> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    width: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> T {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let p = self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v /= p;
        }
        let prow = self.rows[pr].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let f = row[pc];
            if f != T::zero() {
                for (v, &pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[pr] = pc;
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        (0..self.width)
            .map(|j| {
                let zj = self
                    .basis
                    .iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (i, &bj)| acc + cost[bj] * self.rows[i][j]);
                cost[j] - zj
            })
            .collect()
    }

    fn value(&self, cost: &[T]) -> T {
        self.basis
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &bj)| acc + cost[bj] * self.rhs(i))
    }

    /// Maximizes `cost` over columns `< allowed`. Returns false if unbounded.
    fn run(&mut self, cost: &[T], allowed: usize) -> bool {
        let tol = pivot_tol::<T>();
        for _ in 0..50_000 {
            let rc = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| rc[j] > tol && !self.basis.contains(&j)) else {
                return true;
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > tol {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - tol
                                || (ratio <= lr + tol && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((pr, _)) => self.pivot(pr, enter),
                None => return false,
            }
        }
        log::warn!("simplex iteration cap reached");
        true
    }
}

/// Maximizes `c^T y` subject to `A y <= b`, `y >= 0`.
pub(crate) fn maximize<T: Scalar>(c: &[T], a: &DMatrix<T>, b: &[T]) -> LpOutcome<T> {
    let (m, n) = a.shape();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);
    let n_art = b.iter().filter(|&&v| v < T::zero()).count();
    let width = n + m + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = 0;
    for i in 0..m {
        let mut row = vec![T::zero(); width + 1];
        let sign = if b[i] < T::zero() { -T::one() } else { T::one() };
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = sign;
        row[width] = sign * b[i];
        if b[i] < T::zero() {
            row[n + m + art] = T::one();
            basis.push(n + m + art);
            art += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, width };
    let tol = pivot_tol::<T>();

    if n_art > 0 {
        let mut cost1 = vec![T::zero(); width];
        for v in cost1.iter_mut().skip(n + m) {
            *v = -T::one();
        }
        tab.run(&cost1, width);
        let scale = b.iter().fold(T::one(), |acc, &v| acc.max(v.abs()));
        if tab.value(&cost1) < -tol * scale * lit(10.0) {
            return LpOutcome::Infeasible;
        }
        // drive remaining zero-level artificials out of the basis
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.rows[i][j].abs() > tol) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let mut cost2 = vec![T::zero(); width];
    cost2[..n].copy_from_slice(c);
    if !tab.run(&cost2, n + m) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.rhs(i);
        }
    }
    let value = c.iter().zip(&x).fold(T::zero(), |acc, (&ci, &xi)| acc + ci * xi);
    LpOutcome::Optimal { x, value }
}

/// Radius (capped at 1) of the largest ball inside `{d : G d + g >= 0}`,
/// or `None` when the polyhedron is empty.
pub(crate) fn chebyshev_radius<T: Scalar>(g_mat: &DMatrix<T>, g_off: &DVector<T>) -> Option<T> {
    let (rows, n) = g_mat.shape();
    let tol = pivot_tol::<T>();
    let mut kept: Vec<(DVector<T>, T)> = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = g_mat.row(i).transpose();
        let norm = row.norm();
        if norm <= tol {
            if g_off[i] < -tol {
                return None;
            }
            continue;
        }
        kept.push((row / norm, g_off[i] / norm));
    }
    // variables: d+ (n), d- (n), s; rows: -a d + s <= b, s <= 1
    let m = kept.len() + 1;
    let mut a = DMatrix::zeros(m, 2 * n + 1);
    let mut b = vec![T::zero(); m];
    for (i, (row, off)) in kept.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = -row[j];
            a[(i, n + j)] = row[j];
        }
        a[(i, 2 * n)] = T::one();
        b[i] = *off;
    }
    a[(m - 1, 2 * n)] = T::one();
    b[m - 1] = T::one();
    let mut c = vec![T::zero(); 2 * n + 1];
    c[2 * n] = T::one();
    match maximize(&c, &a, &b) {
        LpOutcome::Optimal { value, .. } => Some(value),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => Some(T::one()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0]);
        match maximize(&[3.0, 5.0], &a, &[4.0, 12.0, 18.0]) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 36.0f64).abs() < 1e-9);
                assert!((x[0] - 2.0f64).abs() < 1e-9 && (x[1] - 6.0f64).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        // x <= -1 with x >= 0
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert_eq!(maximize(&[1.0], &a, &[-1.0]), LpOutcome::Infeasible);
        // max x with -x <= 0
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert_eq!(maximize(&[1.0], &a, &[0.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn phase_one_with_negative_rhs() {
        // max -x, x >= 2 (i.e. -x <= -2), x <= 5
        let a = DMatrix::from_row_slice(2, 1, &[-1.0, 1.0]);
        match maximize(&[-1.0], &a, &[-2.0, 5.0]) {
            LpOutcome::Optimal { x, .. } => assert!((x[0] - 2.0f64).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chebyshev_classifies_regions() {
        // unit interval: d >= 0, 1 - d >= 0 -> radius 0.5
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let r = chebyshev_radius(&g, &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!((r - 0.5f64).abs() < 1e-9);
        // single point: d >= 0, -d >= 0 -> radius 0
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let r: f64 = chebyshev_radius(&g, &DVector::zeros(2)).unwrap();
        assert!(r.abs() < 1e-9);
        // empty: d >= 1, -d >= 0
        assert!(chebyshev_radius(&g, &DVector::from_vec(vec![-1.0, 0.0])).is_none());
        // half-plane -> capped at 1
        let g = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert_eq!(chebyshev_radius(&g, &DVector::zeros(1)), Some(1.0));
    }
}
