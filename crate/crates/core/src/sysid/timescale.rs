//! Intrinsic timescale from the decay of across-trial autocorrelation.

use crate::error::{HsrError, Result};
use nalgebra::DMatrix;
use serde::Serialize;
use std::ops::RangeInclusive;

/// Fitted `rho_bar[k] ~ amplitude * exp(-k / tau_bins)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimescaleFit {
    pub amplitude: f64,
    /// Decay constant in lag units.
    pub tau_bins: f64,
    /// Decay constant in time units (`tau_bins * bin_width`).
    pub tau: f64,
    /// Mean correlation per lag; `None` where no bin pair had variance.
    pub rho_bar: Vec<Option<f64>>,
    /// Lags that entered the log-linear fit.
    pub lags_used: Vec<usize>,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx > 0.0 && syy > 0.0 {
        Some(sxy / (sxx * syy).sqrt())
    } else {
        None
    }
}

/// Across-trial Pearson correlation between every pair of bins, averaged
/// over pairs at equal lag. `trial_rates` is trials × bins. Bin pairs where
/// either bin has no variance across trials are skipped.
pub fn mean_autocorrelation(trial_rates: &DMatrix<f64>) -> Result<Vec<Option<f64>>> {
    let (trials, bins) = trial_rates.shape();
    if trials < 2 || bins == 0 {
        return Err(HsrError::InvalidInput(format!(
            "autocorrelation needs at least 2 trials and 1 bin (got {trials} × {bins})"
        )));
    }
    let cols: Vec<Vec<f64>> = (0..bins).map(|k| trial_rates.column(k).iter().copied().collect()).collect();
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for k1 in 0..bins {
        for k2 in k1..bins {
            if let Some(r) = pearson(&cols[k1], &cols[k2]) {
                sum[k2 - k1] += r;
                count[k2 - k1] += 1;
            }
        }
    }
    Ok(sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| (c > 0).then(|| s / c as f64))
        .collect())
}

/// Least-squares fit of `ln rho_bar[k] = ln A - k / tau` over the lags in
/// `fit_lags` whose mean correlation is positive.
pub fn fit_exponential(rho_bar: &[Option<f64>], bin_width: f64, fit_lags: RangeInclusive<usize>) -> Result<TimescaleFit> {
    if *fit_lags.end() >= rho_bar.len() {
        return Err(HsrError::InvalidInput(format!(
            "fit lags {:?} exceed the {} available lags",
            fit_lags,
            rho_bar.len()
        )));
    }
    let pts: Vec<(usize, f64)> = fit_lags
        .clone()
        .filter_map(|k| rho_bar[k].filter(|r| *r > 0.0).map(|r| (k, r.ln())))
        .collect();
    if pts.is_empty() {
        return Err(HsrError::NonPositiveCorrelations);
    }
    if pts.len() < 2 {
        return Err(HsrError::InvalidInput(
            "fewer than two lags with positive correlation; cannot fit a decay".into(),
        ));
    }
    let n = pts.len() as f64;
    let mk = pts.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|&(k, y)| (k as f64 - mk) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(k, _)| (k as f64 - mk).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(HsrError::InvalidInput(format!(
            "correlations do not decay over the fit lags (slope {slope})"
        )));
    }
    let tau_bins = -1.0 / slope;
    Ok(TimescaleFit {
        amplitude: (my - slope * mk).exp(),
        tau_bins,
        tau: tau_bins * bin_width,
        rho_bar: rho_bar.to_vec(),
        lags_used: pts.iter().map(|p| p.0).collect(),
    })
}

/// Mean autocorrelation of `trial_rates` followed by [`fit_exponential`].
pub fn autocorr_timescale(trial_rates: &DMatrix<f64>, bin_width: f64, fit_lags: RangeInclusive<usize>) -> Result<TimescaleFit> {
    if !(bin_width > 0.0) {
        return Err(HsrError::InvalidInput(format!("bin width must be positive, got {bin_width}")));
    }
    let rho = mean_autocorrelation(trial_rates)?;
    fit_exponential(&rho, bin_width, fit_lags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    pub(crate) fn ar1_trials(trials: usize, bins: usize, tau_bins: f64, seed: u64) -> DMatrix<f64> {
        let a = (-1.0 / tau_bins).exp();
        let s = (1.0 - a * a).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(trials, bins);
        for i in 0..trials {
            let mut x: f64 = StandardNormal.sample(&mut rng);
            for k in 0..bins {
                if k > 0 {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    x = a * x + s * e;
                }
                m[(i, k)] = 5.0 + x;
            }
        }
        m
    }

    #[test]
    fn noiseless_exponential_is_recovered_exactly() {
        let rho: Vec<Option<f64>> = (0..20).map(|k| Some(0.8 * (-(k as f64) / 5.0).exp())).collect();
        let fit = fit_exponential(&rho, 1.0, 1..=10).unwrap();
        assert!((fit.tau - 5.0).abs() / 5.0 < 1e-6);
        assert!((fit.amplitude - 0.8).abs() / 0.8 < 1e-6);
        let fit = fit_exponential(&rho, 0.2, 1..=10).unwrap();
        assert!((fit.tau - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ar1_timescale_within_ten_percent() {
        let tau = 3.0;
        // Lags beyond tau are too noisy at 500 trials to keep the error under 10%.
        let m = ar1_trials(500, 40, tau, 11);
        let fit = autocorr_timescale(&m, 1.0, 1..=3).unwrap();
        assert!((fit.tau - tau).abs() / tau < 0.1, "tau {}", fit.tau);
    }

    #[test]
    fn fast_and_slow_populations_are_ordered() {
        let fast = autocorr_timescale(&ar1_trials(500, 30, 1.0, 3), 0.2, 1..=4).unwrap();
        let slow = autocorr_timescale(&ar1_trials(500, 30, 3.0, 4), 0.2, 1..=4).unwrap();
        assert!(fast.tau < slow.tau);
    }

    #[test]
    fn non_positive_correlations_are_reported() {
        let rho = vec![Some(1.0), Some(-0.2), Some(-0.1), None];
        assert_eq!(fit_exponential(&rho, 1.0, 1..=3), Err(HsrError::NonPositiveCorrelations));
    }

    #[test]
    fn single_trial_is_rejected() {
        let m = DMatrix::from_element(1, 5, 1.0);
        assert!(autocorr_timescale(&m, 1.0, 1..=2).unwrap_err().is_validation());
    }

    #[test]
    fn constant_bins_are_skipped() {
        let mut m = ar1_trials(50, 6, 2.0, 1);
        m.column_mut(0).fill(1.0);
        let rho = mean_autocorrelation(&m).unwrap();
        // The only pair at the largest lag involves the constant bin.
        assert!(rho[..5].iter().all(|r| r.is_some()));
        assert_eq!(rho[5], None);
        assert!((rho[0].unwrap() - 1.0).abs() < 1e-12);
    }
}
