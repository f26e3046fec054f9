//! Small statistics helpers shared by the Monte Carlo checks.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Seed;

/// Sample mean and standard error of the mean, by Welford's update so that
/// constant samples give an exact mean and a zero error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let (mut mean, mut m2) = (0.0, 0.0);
    for (k, &v) in values.iter().enumerate() {
        let d = v - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (v - mean);
    }
    if n == 1 {
        return (mean, 0.0);
    }
    (mean, (m2.max(0.0) / ((n - 1) * n) as f64).sqrt())
}

/// Monte Carlo means of the two sides of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorPair {
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    pub rhs_mean: f64,
    pub rhs_stderr: f64,
    pub n_samples: usize,
    pub z_score: f64,
}

impl EstimatorPair {
    pub fn new(lhs_mean: f64, lhs_stderr: f64, rhs_mean: f64, rhs_stderr: f64, n_samples: usize) -> Self {
        let z_score = z_score(lhs_mean, lhs_stderr, rhs_mean, rhs_stderr);
        EstimatorPair { lhs_mean, lhs_stderr, rhs_mean, rhs_stderr, n_samples, z_score }
    }

    pub fn from_samples(lhs: &[f64], rhs: &[f64]) -> Self {
        let (lm, ls) = mean_se(lhs);
        let (rm, rs) = mean_se(rhs);
        Self::new(lm, ls, rm, rs, lhs.len().min(rhs.len()))
    }

    /// Standard score of `value` against each side separately.
    pub fn side_z_scores(&self, value: f64) -> (f64, f64) {
        (z_score(self.lhs_mean, self.lhs_stderr, value, 0.0), z_score(self.rhs_mean, self.rhs_stderr, value, 0.0))
    }
}

/// `|a - b| / sqrt(sa^2 + sb^2)`; zero when both means agree exactly.
pub fn z_score(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    let s = sa.hypot(sb);
    if s == 0.0 {
        f64::INFINITY
    } else {
        d / s
    }
}

/// Two-sided threshold for `k` simultaneous comparisons, keeping the
/// family-wise level of a single `|z| < base` test.
pub fn bonferroni_z(base: f64, k: usize) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    if k <= 1 {
        return base;
    }
    let n = Normal::standard();
    let alpha = 2.0 * (1.0 - n.cdf(base));
    n.inverse_cdf(1.0 - alpha / (2.0 * k as f64))
}

/// Kolmogorov-Smirnov distance between two empirical distributions.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    ks_sorted(&a, &b)
}

pub fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// KS distance between an empirical sample over states `0..k` and a
/// reference mass function on the same ordered states.
pub fn ks_discrete(counts: &[u64], reference: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let (mut fa, mut fb, mut d) = (0.0, 0.0, 0.0f64);
    for (c, p) in counts.iter().zip(reference) {
        fa += *c as f64 / n as f64;
        fb += p;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Standard deviation of the two-sample KS statistic under resampling.
pub fn ks_bootstrap_sigma(a: &[f64], b: &[f64], reps: usize, seed: Seed) -> f64 {
    let mut rng = seed.rng();
    let mut stats = Vec::with_capacity(reps);
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    for _ in 0..reps {
        for v in ra.iter_mut() {
            *v = a[rng.random_range(0..a.len())];
        }
        for v in rb.iter_mut() {
            *v = b[rng.random_range(0..b.len())];
        }
        ra.sort_by(f64::total_cmp);
        rb.sort_by(f64::total_cmp);
        stats.push(ks_sorted(&ra, &rb));
    }
    let (m, _) = mean_se(&stats);
    (stats.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (reps.max(2) - 1) as f64).sqrt()
}
