//! Fit objective, goodness of fit and model prediction.

use super::model::RateSeries;
use super::problem::SysIdProblem;
use crate::error::{HsrError, Result};
use serde::Serialize;

/// `f = sse + gamma1 * corr + gamma2 * var`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ObjectiveValue {
    pub f: f64,
    pub sse: f64,
    pub corr: f64,
    pub var: f64,
}

struct Moments {
    mean: f64,
    sd: f64,
}

fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    Moments { mean, sd: (ss / (n - 1.0)).sqrt() }
}

/// Sample correlation with `K - 1` normalization. Two constant signals
/// count as perfectly correlated; one constant signal as uncorrelated.
fn correlation(est: &[f64], obs: &[f64], me: &Moments, mo: &Moments) -> f64 {
    match (me.sd > 0.0, mo.sd > 0.0) {
        (true, true) => {
            let k = est.len() as f64;
            let s: f64 = est.iter().zip(obs).map(|(a, b)| (a - me.mean) * (b - mo.mean)).sum();
            s / ((k - 1.0) * me.sd * mo.sd)
        }
        (false, false) => 1.0,
        _ => 0.0,
    }
}

/// Objective terms for series given as `[condition][node][k]`.
pub(crate) fn components(obs: &[Vec<Vec<f64>>], est: &[Vec<Vec<f64>>], gamma1: f64, gamma2: f64) -> ObjectiveValue {
    let mut sse = 0.0;
    let mut corr_sum = 0.0;
    let mut var4 = 0.0;
    let mut pairs = 0usize;
    for (oc, ec) in obs.iter().zip(est) {
        for (o, e) in oc.iter().zip(ec) {
            sse += o.iter().zip(e).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let (mo, me) = (moments(o), moments(e));
            corr_sum += correlation(e, o, &me, &mo);
            var4 += (me.sd - mo.sd).powi(4);
            pairs += 1;
        }
    }
    let corr = 1.0 - corr_sum / pairs as f64;
    let var = var4.powf(0.25);
    ObjectiveValue { f: sse + gamma1 * corr + gamma2 * var, sse, corr, var }
}

fn check_pair(data: &[RateSeries], est: &[RateSeries]) -> Result<()> {
    if data.len() != est.len() || data.is_empty() {
        return Err(HsrError::DimensionMismatch(format!("{} data conditions vs {} estimates", data.len(), est.len())));
    }
    for (d, e) in data.iter().zip(est) {
        if d.node_ids != e.node_ids || d.len() != e.len() {
            return Err(HsrError::DimensionMismatch(format!(
                "condition `{}`: data and estimate differ in nodes or length",
                d.condition
            )));
        }
    }
    Ok(())
}

/// Objective of estimated series against data (same layout).
pub fn objective_of_series(data: &[RateSeries], est: &[RateSeries], gamma1: f64, gamma2: f64) -> Result<ObjectiveValue> {
    check_pair(data, est)?;
    let obs: Vec<_> = data.iter().map(|d| d.values.clone()).collect();
    let est: Vec<_> = est.iter().map(|d| d.values.clone()).collect();
    Ok(components(&obs, &est, gamma1, gamma2))
}

/// Simulates `z` in every condition and scores it against the data.
pub fn objective(z: &[f64], problem: &SysIdProblem) -> Result<ObjectiveValue> {
    problem.check_z(z)?;
    objective_unchecked(z, problem)
}

pub(crate) fn objective_unchecked(z: &[f64], problem: &SysIdProblem) -> Result<ObjectiveValue> {
    let est = problem.simulate_manifest(z)?;
    let obs: Vec<_> = problem.data().iter().map(|d| d.values.clone()).collect();
    Ok(components(&obs, &est, problem.gamma1(), problem.gamma2()))
}

/// Pooled `1 - SSE / SST` with one mean per node and condition.
pub fn r_squared(data: &[RateSeries], est: &[RateSeries]) -> Result<f64> {
    check_pair(data, est)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (d, e) in data.iter().zip(est) {
        for (o, h) in d.values.iter().zip(&e.values) {
            let mu = o.iter().sum::<f64>() / o.len() as f64;
            num += o.iter().zip(h).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            den += o.iter().map(|a| (a - mu).powi(2)).sum::<f64>();
        }
    }
    Ok(if den > 0.0 {
        1.0 - num / den
    } else if num == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    })
}

/// Model estimates of the manifest rates in every condition.
pub fn predict(z: &[f64], problem: &SysIdProblem) -> Result<Vec<RateSeries>> {
    problem.check_z(z)?;
    let est = problem.simulate_manifest(z)?;
    Ok(problem
        .data()
        .iter()
        .zip(est)
        .map(|(d, values)| RateSeries { values, ..d.clone() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: Vec<Vec<f64>>) -> RateSeries {
        let ids = (0..values.len()).map(|j| format!("n{j}")).collect();
        RateSeries::new("LC", 0.0, 0.1, ids, values).unwrap()
    }

    #[test]
    fn perfect_fit_is_zero() {
        let d = vec![series(vec![vec![1.0, 3.0, 2.0, 5.0], vec![0.0, 0.5, 0.2, 0.1]])];
        let v = objective_of_series(&d, &d, 250.0, 150.0).unwrap();
        assert_eq!(v, ObjectiveValue { f: 0.0, sse: 0.0, corr: 0.0, var: 0.0 });
        assert_eq!(r_squared(&d, &d).unwrap(), 1.0);
    }

    #[test]
    fn offset_only_changes_sse() {
        let x = vec![vec![1.0, 3.0, 2.0, 5.0], vec![4.0, 0.5, 0.2, 0.1]];
        let delta = 0.7;
        let shifted: Vec<Vec<f64>> = x.iter().map(|v| v.iter().map(|a| a + delta).collect()).collect();
        let d = vec![series(x.clone()), series(x)];
        let e = vec![series(shifted.clone()), series(shifted)];
        let v = objective_of_series(&d, &e, 250.0, 150.0).unwrap();
        // 2 conditions * 2 nodes * 4 samples
        assert!((v.sse - 16.0 * delta * delta).abs() < 1e-12);
        assert!(v.corr.abs() < 1e-12);
        assert!(v.var.abs() < 1e-12);
    }

    #[test]
    fn hand_computed_two_node_example() {
        // Node a: data (1,2,3), estimate (1,3,2): means 2, s.d. 1, cov 1/2.
        // Node b: data (2,2,5), estimate (1,2,3): s.d. sqrt(3) and 1, cov 3/2.
        let d = vec![series(vec![vec![1.0, 2.0, 3.0], vec![2.0, 2.0, 5.0]])];
        let e = vec![series(vec![vec![1.0, 3.0, 2.0], vec![1.0, 2.0, 3.0]])];
        let v = objective_of_series(&d, &e, 250.0, 150.0).unwrap();
        let r3 = 3.0f64.sqrt();
        assert!((v.sse - 7.0).abs() < 1e-12);
        let corr = 1.0 - (0.5 + 1.5 / r3) / 2.0;
        assert!((v.corr - corr).abs() < 1e-12);
        assert!((v.var - (r3 - 1.0)).abs() < 1e-12);
        assert!((v.f - (7.0 + 250.0 * corr + 150.0 * (r3 - 1.0))).abs() < 1e-9);
        assert!((v.f - 196.054_44).abs() < 1e-4);
    }

    #[test]
    fn means_give_zero_r_squared() {
        let x = vec![vec![1.0, 3.0, 2.0, 5.0], vec![4.0, 0.5, 0.2, 0.1]];
        let means: Vec<Vec<f64>> = x.iter().map(|v| vec![v.iter().sum::<f64>() / 4.0; 4]).collect();
        assert!(r_squared(&[series(x)], &[series(means)]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mismatched_layouts_are_rejected() {
        let a = series(vec![vec![1.0, 2.0]]);
        let b = series(vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert!(r_squared(&[a], &[b]).is_err());
    }

    fn signal() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..20.0, 6)
    }

    proptest! {
        #[test]
        fn objective_terms_are_in_range(o1 in signal(), o2 in signal(), e1 in signal(), e2 in signal(), shift in 0.0f64..5.0) {
            let d = vec![series(vec![o1, o2])];
            let e = vec![series(vec![e1.clone(), e2.clone()])];
            let v = objective_of_series(&d, &e, 250.0, 150.0).unwrap();
            prop_assert!(v.sse >= 0.0 && v.var >= 0.0);
            prop_assert!(v.corr >= -1e-12 && v.corr <= 2.0 + 1e-12);
            prop_assert_eq!(v.f, v.sse + 250.0 * v.corr + 150.0 * v.var);
            let s = vec![series(vec![e1.iter().map(|x| x + shift).collect(), e2])];
            let w = objective_of_series(&d, &s, 250.0, 150.0).unwrap();
            prop_assert!((w.corr - v.corr).abs() < 1e-9);
            prop_assert!((w.var - v.var).abs() < 1e-9);
        }
    }
}
