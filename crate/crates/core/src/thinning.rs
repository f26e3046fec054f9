//! Thinning and Poissonization of particle configurations.

use std::collections::HashMap;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::config::Config;
use crate::rng::{Rng, Seed};
use crate::scalar::Scalar;

/// Per-site retention probabilities; a single value applies to every site.
#[derive(Debug, Clone, PartialEq)]
pub enum ThinningProfile {
    Uniform(f64),
    PerSite(Vec<f64>),
}

impl ThinningProfile {
    pub fn uniform(u: f64) -> Result<Self> {
        check_prob(u)?;
        Ok(ThinningProfile::Uniform(u))
    }

    pub fn per_site(u: Vec<f64>) -> Result<Self> {
        for &p in &u {
            check_prob(p)?;
        }
        Ok(ThinningProfile::PerSite(u))
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            ThinningProfile::Uniform(u) => *u,
            ThinningProfile::PerSite(u) => u[i],
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self {
            ThinningProfile::PerSite(u) if u.len() != n => Err(Error::SiteMismatch { expected: n, got: u.len() }),
            _ => Ok(()),
        }
    }
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Param(format!("retention probability {p} outside [0,1]")))
    }
}

fn discrete(x: &Config) -> Result<&[u32]> {
    x.discrete().ok_or_else(|| Error::Variant("thinning needs a spin or count configuration".into()))
}

/// Keeps each particle at site `i` independently with probability `u(i)`,
/// drawing one binomial per site.
pub fn thin_with(x: &Config, u: &ThinningProfile, rng: &mut Rng) -> Result<Config> {
    let v = discrete(x)?;
    u.check_len(v.len())?;
    let out = v
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let p = u.get(i);
            if n == 0 || p == 0.0 {
                0
            } else if p == 1.0 {
                n
            } else {
                Binomial::new(n as u64, p).expect("valid binomial").sample(rng) as u32
            }
        })
        .collect();
    Ok(x.with_discrete(out))
}

pub fn thin(x: &Config, u: &ThinningProfile, seed: Seed) -> Result<Config> {
    thin_with(x, u, &mut seed.rng())
}

/// Same law as [`thin`], but with one uniform per particle compared against
/// `u(i)`. With a shared seed, larger profiles retain supersets.
pub fn thin_per_particle(x: &Config, u: &ThinningProfile, seed: Seed) -> Result<Config> {
    let v = discrete(x)?;
    u.check_len(v.len())?;
    let mut rng = seed.rng();
    let out = v
        .iter()
        .enumerate()
        .map(|(i, &n)| (0..n).filter(|_| rng.random::<f64>() < u.get(i)).count() as u32)
        .collect();
    Ok(x.with_discrete(out))
}

pub fn poisson_field_with(y: &[f64], rng: &mut Rng) -> Result<Config> {
    if let Some(v) = y.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Param(format!("Poisson intensity {v} must be finite and >= 0")));
    }
    let counts = y
        .iter()
        .map(|&l| if l == 0.0 { 0 } else { Poisson::new(l).expect("valid intensity").sample(rng) as u32 })
        .collect();
    Ok(Config::Count(counts))
}

/// Independent Poisson counts with the given per-site intensities.
pub fn poisson_field(y: &[f64], seed: Seed) -> Result<Config> {
    poisson_field_with(y, &mut seed.rng())
}

fn binomial_coeff<T: Scalar>(n: u32, k: u32) -> T {
    (0..k).fold(T::one(), |acc, i| acc * T::from_int((n - i) as i64) / T::from_int((i + 1) as i64))
}

/// `E[(1-theta)^Thin(x)]` by summing the binomial law of each site, against
/// `prod_i (1 - theta theta')^x(i)`. Valid for every real `theta`.
pub fn thin_generating_check<T: Scalar>(x: &[u32], theta: &T, theta_keep: &T) -> Result<(T, T)> {
    if theta_keep.lt_zero() || *theta_keep > T::one() {
        return Err(Error::Param(format!("retention probability {theta_keep} outside [0,1]")));
    }
    let drop = T::one() - theta_keep.clone();
    let base = T::one() - theta.clone();
    let mut lhs = T::one();
    let mut rhs = T::one();
    for &n in x {
        let mut site = T::zero();
        for k in 0..=n {
            site = site
                + binomial_coeff::<T>(n, k) * theta_keep.powi(k) * drop.powi(n - k) * base.powi(k);
        }
        lhs = lhs * site;
        rhs = rhs * (T::one() - theta.clone() * theta_keep.clone()).powi(n);
    }
    Ok((lhs, rhs))
}

fn binomial_pmf<T: Scalar>(n: u32, p: &T) -> Vec<T> {
    let q = T::one() - p.clone();
    (0..=n).map(|k| binomial_coeff::<T>(n, k) * p.powi(k) * q.powi(n - k)).collect()
}

/// Per-site laws of `Thin_v(Thin_u(x))` and `Thin_{uv}(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport<T = f64> {
    pub composed: Vec<Vec<T>>,
    pub direct: Vec<Vec<T>>,
    pub max_abs_difference: f64,
    pub exact_match: bool,
}

/// Closed-form comparison of the two mass functions at every site.
pub fn thin_composition_exact<T: Scalar>(x: &[u32], u: &[T], v: &[T]) -> Result<CompositionReport<T>> {
    if u.len() != x.len() || v.len() != x.len() {
        return Err(Error::SiteMismatch { expected: x.len(), got: u.len().min(v.len()) });
    }
    for p in u.iter().chain(v) {
        if p.lt_zero() || *p > T::one() {
            return Err(Error::Param(format!("retention probability {p} outside [0,1]")));
        }
    }
    let mut composed = Vec::new();
    let mut direct = Vec::new();
    let mut max_diff = 0.0f64;
    let mut exact = true;
    for i in 0..x.len() {
        let first = binomial_pmf(x[i], &u[i]);
        let mut law = vec![T::zero(); x[i] as usize + 1];
        for (j, pj) in first.iter().enumerate() {
            for (k, pk) in binomial_pmf(j as u32, &v[i]).into_iter().enumerate() {
                law[k] = law[k].clone() + pj.clone() * pk;
            }
        }
        let d = binomial_pmf(x[i], &(u[i].clone() * v[i].clone()));
        for (a, b) in law.iter().zip(&d) {
            let diff = a.clone() - b.clone();
            exact &= diff.is_zero();
            max_diff = max_diff.max(diff.as_f64().abs());
        }
        composed.push(law);
        direct.push(d);
    }
    Ok(CompositionReport { composed, direct, max_abs_difference: max_diff, exact_match: exact })
}

/// Chi-square homogeneity test between two samples of configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledComparison {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub n_samples: usize,
}

/// Draws `Thin_v(Thin_u(x))` and `Thin_{uv}(x)` `n` times each and tests
/// whether the two samples share a law. Categories with small expected
/// counts are pooled.
pub fn thin_composition_sampled(
    x: &Config,
    u: &ThinningProfile,
    v: &ThinningProfile,
    n_samples: usize,
    seed: Seed,
) -> Result<SampledComparison> {
    let n_sites = x.len();
    u.check_len(n_sites)?;
    v.check_len(n_sites)?;
    let uv = ThinningProfile::PerSite((0..n_sites).map(|i| u.get(i) * v.get(i)).collect());
    let mut r1 = seed.child(0).rng();
    let mut r2 = seed.child(1).rng();
    let mut counts: HashMap<Vec<u32>, [u64; 2]> = HashMap::new();
    for _ in 0..n_samples {
        let a = thin_with(&thin_with(x, u, &mut r1)?, v, &mut r1)?;
        let b = thin_with(x, &uv, &mut r2)?;
        counts.entry(a.discrete().unwrap().to_vec()).or_default()[0] += 1;
        counts.entry(b.discrete().unwrap().to_vec()).or_default()[1] += 1;
    }
    Ok(chi_square_homogeneity(counts.into_values().collect(), n_samples))
}

/// Two-sample chi-square test with equal sample sizes; cells whose pooled
/// count is below 10 (expected < 5 per side) are merged.
pub fn chi_square_homogeneity(mut cells: Vec<[u64; 2]>, n_samples: usize) -> SampledComparison {
    cells.sort_by_key(|c| std::cmp::Reverse(c[0] + c[1]));
    let mut pooled: Vec<[u64; 2]> = Vec::new();
    let mut rest = [0u64; 2];
    for c in cells {
        if c[0] + c[1] >= 10 {
            pooled.push(c);
        } else {
            rest[0] += c[0];
            rest[1] += c[1];
        }
    }
    if rest[0] + rest[1] > 0 {
        if rest[0] + rest[1] >= 10 || pooled.is_empty() {
            pooled.push(rest);
        } else {
            let last = pooled.last_mut().unwrap();
            last[0] += rest[0];
            last[1] += rest[1];
        }
    }
    let stat: f64 = pooled
        .iter()
        .map(|c| {
            let e = (c[0] + c[1]) as f64 / 2.0;
            ((c[0] as f64 - e).powi(2) + (c[1] as f64 - e).powi(2)) / e
        })
        .sum();
    let dof = pooled.len().saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(stat) };
    SampledComparison { statistic: stat, degrees_of_freedom: dof, p_value, n_samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn identity_and_zero_profiles() {
        let x = Config::count(vec![3, 0, 5]);
        assert_eq!(thin(&x, &ThinningProfile::Uniform(1.0), Seed::new(1)).unwrap(), x);
        assert_eq!(thin(&x, &ThinningProfile::Uniform(0.0), Seed::new(1)).unwrap(), Config::count(vec![0, 0, 0]));
        let s = Config::spin(vec![1, 0, 1]).unwrap();
        assert!(matches!(thin(&s, &ThinningProfile::Uniform(0.5), Seed::new(3)).unwrap(), Config::Spin(_)));
        assert!(thin(&x, &ThinningProfile::PerSite(vec![0.5]), Seed::new(1)).is_err());
        assert!(ThinningProfile::uniform(1.5).is_err());
    }

    #[test]
    fn generating_function_examples() {
        let q = |n, d| Rational::from_ratio(n, d);
        let (l, r) = thin_generating_check(&[3], &q(-2, 1), &q(1, 2)).unwrap();
        assert_eq!(l, q(8, 1));
        assert_eq!(r, q(8, 1));
        let (l, r) = thin_generating_check(&[2, 1], &q(1, 1), &q(1, 3)).unwrap();
        assert_eq!(l, q(4, 9) * q(2, 3));
        assert_eq!(l, r);
    }

    #[test]
    fn composition_exact_example() {
        let h = Rational::from_ratio(1, 2);
        let rep = thin_composition_exact(&[4], std::slice::from_ref(&h), std::slice::from_ref(&h)).unwrap();
        assert!(rep.exact_match);
        let quarter = Rational::from_ratio(1, 4);
        assert_eq!(rep.direct[0], binomial_pmf(4, &quarter));
    }

    #[test]
    fn poisson_field_rejects_negative() {
        assert!(poisson_field(&[1.0, -0.1], Seed::new(0)).is_err());
        assert_eq!(poisson_field(&[0.0, 0.0], Seed::new(0)).unwrap(), Config::count(vec![0, 0]));
    }

    #[test]
    fn chi_square_pooling() {
        let same = chi_square_homogeneity(vec![[500, 500], [300, 300], [2, 1], [1, 2]], 806);
        assert!(same.p_value > 0.99);
        let diff = chi_square_homogeneity(vec![[700, 300], [300, 700]], 1000);
        assert!(diff.p_value < 1e-10);
    }
}
