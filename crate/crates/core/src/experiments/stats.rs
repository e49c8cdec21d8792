//! Statistical helpers for the experiment harness.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// A binomial point estimate with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BinomialEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

const Z95: f64 = 1.959963984540054;

pub fn binomial_estimate(successes: u64, trials: u64) -> BinomialEstimate {
    if trials == 0 {
        return BinomialEstimate {
            successes,
            trials,
            estimate: f64::NAN,
            ci95_low: f64::NAN,
            ci95_high: f64::NAN,
        };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let spread = (Z95 / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    BinomialEstimate {
        successes,
        trials,
        estimate: p,
        ci95_low: (center - spread).max(0.0),
        ci95_high: (center + spread).min(1.0),
    }
}

/// Pearson chi-square p-value against the uniform distribution over the bins.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let bins = counts.len();
    assert!(bins >= 2, "need at least two bins");
    let total: u64 = counts.iter().sum();
    assert!(total > 0, "need at least one observation");
    let expected = total as f64 / bins as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((bins - 1) as f64).expect("df ≥ 1");
    1.0 - dist.cdf(statistic)
}

/// Least-squares line y = slope·x + intercept.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(points: &[(f64, f64)]) -> LinearFit {
    assert!(points.len() >= 2, "need at least two points");
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_brackets_estimate() {
        let e = binomial_estimate(594, 1000);
        assert!((e.estimate - 0.594).abs() < 1e-12);
        assert!(e.ci95_low < 0.594 && 0.594 < e.ci95_high);
        assert!(e.ci95_high - e.ci95_low < 0.07);

        let zero = binomial_estimate(0, 50);
        assert_eq!(zero.estimate, 0.0);
        assert!(zero.ci95_low == 0.0 && zero.ci95_high > 0.0);
        let all = binomial_estimate(50, 50);
        assert!(all.ci95_high == 1.0 && all.ci95_low < 1.0);
    }

    #[test]
    fn chi_square_detects_uniform_and_skewed() {
        let uniform = vec![250u64; 64];
        assert!(chi_square_uniform_p(&uniform) > 0.99);

        let mut skewed = vec![250u64; 64];
        skewed[0] = 1000;
        skewed[1] = 0;
        assert!(chi_square_uniform_p(&skewed) < 1e-6);
    }

    #[test]
    fn least_squares_recovers_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 + 1.0)).collect();
        let fit = least_squares(&pts);
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
