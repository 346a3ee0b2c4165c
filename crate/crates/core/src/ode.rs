//! Fixed-step classical Runge-Kutta.

use crate::scalar::{lit, Scalar};
use nalgebra::DVector;

/// One RK4 step of `x' = f(t, x)` from `(t, x)` with step `h`.
pub fn rk4_step<T, F>(f: &F, t: T, x: &DVector<T>, h: T) -> DVector<T>
where
    T: Scalar,
    F: Fn(T, &DVector<T>) -> DVector<T>,
{
    let half = lit::<T>(0.5);
    let k1 = f(t, x);
    let k2 = f(t + h * half, &(x + &k1 * (h * half)));
    let k3 = f(t + h * half, &(x + &k2 * (h * half)));
    let k4 = f(t + h, &(x + &k3 * h));
    x + (k1 + (k2 + k3) * lit::<T>(2.0) + k4) * (h / lit::<T>(6.0))
}

/// Number of fixed steps covering `[t0, t1]` with step `dt`.
///
/// The final step lands on `t0 + n * dt`, which equals `t1` whenever the span
/// is an integer multiple of `dt` up to rounding.
pub fn step_count<T: Scalar>(t0: T, t1: T, dt: T) -> usize {
    let ratio = ((t1 - t0) / dt).to_f64().unwrap_or(0.0);
    (ratio - 1e-9).ceil().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let f = |_t: f64, x: &DVector<f64>| -x;
        let err = |h: f64| {
            let n = (1.0 / h).round() as usize;
            let mut x = DVector::from_element(1, 1.0);
            for k in 0..n {
                x = rk4_step(&f, k as f64 * h, &x, h);
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn step_count_tolerates_rounding() {
        assert_eq!(step_count(0.0, 1.0, 0.1), 10);
        assert_eq!(step_count(0.0, 10.0, 0.02 / 100.0 * 100.0), 500);
        assert_eq!(step_count(-7.0, 7.0, 0.1), 140);
    }
}
