//! Spike binning and Gaussian smoothing of uniformly sampled series.

use crate::error::{HsrError, Result};

/// A uniformly sampled scalar signal; sample `k` sits at `t0 + k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl UniformSeries {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.time(k)).collect()
    }
}

/// Counts spikes in consecutive bins of `bin_width` covering `window` and
/// divides by the width. Bins are half-open except the last one, which
/// also takes spikes at the right edge. Sample times are bin centres.
pub fn bin_rates(spike_times: &[f64], window: (f64, f64), bin_width: f64) -> Result<UniformSeries> {
    let (a, b) = window;
    if !(bin_width > 0.0) || !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(HsrError::InvalidInput(format!(
            "bin_rates: need a finite window with b > a and a positive width (window [{a}, {b}], width {bin_width})"
        )));
    }
    let n = ((b - a) / bin_width).round().max(1.0) as usize;
    let mut counts = vec![0usize; n];
    for &s in spike_times {
        if !(s >= a && s <= b) {
            continue;
        }
        let k = (((s - a) / bin_width).floor() as usize).min(n - 1);
        counts[k] += 1;
    }
    Ok(UniformSeries {
        t0: a + 0.5 * bin_width,
        dt: bin_width,
        values: counts.into_iter().map(|c| c as f64 / bin_width).collect(),
    })
}

/// Normalized Gaussian kernel with standard deviation `sigma_samples`,
/// truncated at four standard deviations. Entry `j` is the weight at
/// offset `j - half_width`.
pub fn gaussian_kernel(sigma_samples: f64) -> Vec<f64> {
    let half = (4.0 * sigma_samples).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * half)
        .map(|j| {
            let d = j as f64 - half as f64;
            (-0.5 * d * d / (sigma_samples * sigma_samples)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Half-sample symmetric reflection of an index into `0..n`
/// (`... c b a | a b c ... x y z | z y x ...`).
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let j = i.rem_euclid(period);
    if j < n as isize {
        j as usize
    } else {
        (period - 1 - j) as usize
    }
}

/// Discrete convolution with a normalized Gaussian of standard deviation
/// `sigma` (time units), truncated at ±4σ, with reflective boundaries.
pub fn gaussian_smooth(series: &UniformSeries, sigma: f64) -> Result<UniformSeries> {
    if !(sigma > 0.0) || !(series.dt > 0.0) {
        return Err(HsrError::InvalidInput(format!(
            "gaussian_smooth: sigma ({sigma}) and dt ({}) must be positive",
            series.dt
        )));
    }
    Ok(UniformSeries {
        t0: series.t0,
        dt: series.dt,
        values: smooth_values(&series.values, sigma / series.dt),
    })
}

pub(crate) fn smooth_values(x: &[f64], sigma_samples: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let kernel = gaussian_kernel(sigma_samples);
    let half = (kernel.len() / 2) as isize;
    (0..n as isize)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, w)| w * x[reflect(i + j as isize - half, n)])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn no_spikes_gives_zero_rates() {
        let s = bin_rates(&[], (0.0, 1.0), 0.1).unwrap();
        assert_eq!(s.values, vec![0.0; 10]);
        assert!((s.t0 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn one_spike_per_bin_is_rate_ten() {
        let spikes: Vec<f64> = (0..20).map(|k| 0.1 * k as f64 + 0.05).collect();
        let s = bin_rates(&spikes, (0.0, 2.0), 0.1).unwrap();
        assert_eq!(s.values.len(), 20);
        for v in &s.values {
            assert!((v - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spike_on_right_edge_lands_in_last_bin() {
        let s = bin_rates(&[1.0], (0.0, 1.0), 0.5).unwrap();
        assert_eq!(s.values, vec![0.0, 2.0]);
    }

    #[test]
    fn poisson_mean_rate_within_three_standard_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rate = 20.0;
        let mut t = 0.0;
        let mut spikes = Vec::new();
        loop {
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / rate;
            if t >= 10.0 {
                break;
            }
            spikes.push(t);
        }
        let s = bin_rates(&spikes, (0.0, 10.0), 0.1).unwrap();
        assert_eq!(s.values.len(), 100);
        let mean = s.values.iter().sum::<f64>() / 100.0;
        // Bin counts are Poisson(2): rate s.d. per bin sqrt(2)/0.1.
        let se = (2.0f64).sqrt() / 0.1 / 10.0;
        assert!((mean - rate).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn constant_is_unchanged() {
        let s = UniformSeries { t0: 0.0, dt: 0.1, values: vec![3.5; 40] };
        let out = gaussian_smooth(&s, 1.0).unwrap();
        for v in out.values {
            assert!((v - 3.5).abs() < 1e-10);
        }
    }

    #[test]
    fn impulse_becomes_sampled_gaussian() {
        let mut values = vec![0.0; 201];
        values[100] = 1.0;
        let s = UniformSeries { t0: 0.0, dt: 0.1, values };
        let out = gaussian_smooth(&s, 1.0).unwrap();
        let total: f64 = out.values.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let peak = out.values[100];
        for (k, v) in out.values.iter().enumerate() {
            let d = (k as f64 - 100.0) * 0.1;
            if d.abs() <= 4.0 {
                assert!((v / peak - (-0.5 * d * d).exp()).abs() < 1e-12);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn sinusoid_attenuation_matches_gaussian_transfer() {
        let dt = 0.05;
        let sigma = 0.5;
        let period = 10.0;
        let w = 2.0 * std::f64::consts::PI / period;
        let values: Vec<f64> = (0..2000).map(|k| (w * k as f64 * dt).sin()).collect();
        let s = UniformSeries { t0: 0.0, dt, values };
        let out = gaussian_smooth(&s, sigma).unwrap();
        let gain = (-0.5 * (w * sigma).powi(2)).exp();
        // Compare amplitudes away from the boundary.
        let amp = out.values[500..1500].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!((amp / gain - 1.0).abs() < 0.01, "amp {amp} vs {gain}");
    }

    #[test]
    fn reflection_handles_kernels_wider_than_the_series() {
        let s = UniformSeries { t0: 0.0, dt: 1.0, values: vec![1.0, 1.0, 1.0] };
        let out = gaussian_smooth(&s, 5.0).unwrap();
        for v in out.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn smoothing_preserves_bounds(values in proptest::collection::vec(0.0f64..50.0, 1..80), sigma in 0.05f64..3.0) {
            let s = UniformSeries { t0: 0.0, dt: 0.1, values: values.clone() };
            let out = gaussian_smooth(&s, sigma).unwrap();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for v in out.values {
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }
    }
}
