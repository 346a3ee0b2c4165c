//! Two-sided permutation test on the difference of means.

use crate::error::{HsrError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Orders the two samples so that the result does not depend on which one
/// is passed first.
fn canonical<'a>(a: &'a [f64], b: &'a [f64]) -> (&'a [f64], &'a [f64]) {
    let ord = a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    if ord == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

/// p-value `(1 + #{|perm stat| >= |observed|}) / (1 + n_perm)` for the
/// absolute difference of means under random relabelling.
pub fn randomization_test(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(HsrError::InvalidInput("randomization test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(HsrError::InvalidInput("randomization test samples must be finite".into()));
    }
    let (a, b) = canonical(a, b);
    let na = a.len();
    let observed = (mean(a) - mean(b)).abs();
    // Differences that are equal up to summation order still count.
    let threshold = observed - 1e-12 * (1.0 + observed);
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let total: f64 = pooled.iter().sum();
    let n = pooled.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_perm {
        pooled.shuffle(&mut rng);
        let sa: f64 = pooled[..na].iter().sum();
        let stat = (sa / na as f64 - (total - sa) / (n - na) as f64).abs();
        if stat >= threshold {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (1 + n_perm) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn identical_samples_give_one() {
        let a = [1.0, 2.5, 3.0, 4.0, 0.5];
        assert_eq!(randomization_test(&a, &a, 999, 1).unwrap(), 1.0);
    }

    #[test]
    fn separated_samples_are_significant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = (0..50).map(|_| d.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..50).map(|_| 3.0 + d.sample(&mut rng)).collect();
        assert!(randomization_test(&a, &b, 10_000, 2).unwrap() < 0.01);
    }

    #[test]
    fn swapping_samples_gives_identical_p() {
        let a = [1.0, 2.0, 4.0, 0.3];
        let b = [2.0, 3.0, 0.1, 5.0, 2.2];
        let p1 = randomization_test(&a, &b, 500, 9).unwrap();
        let p2 = randomization_test(&b, &a, 500, 9).unwrap();
        assert_eq!(p1, p2);
        let c = [2.0, 1.0, 4.0, 0.3];
        assert_eq!(
            randomization_test(&a, &c, 500, 9).unwrap(),
            randomization_test(&c, &a, 500, 9).unwrap()
        );
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert!(randomization_test(&[], &[1.0], 10, 0).is_err());
    }
}
