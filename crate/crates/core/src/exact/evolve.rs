use crate::error::{Error, Result};
use crate::exact::generator::GeneratorMatrix;
use crate::scalar::Scalar;

/// Output of [`evolve_distribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub distribution: Vec<f64>,
    /// Total mass lost or gained before renormalization.
    pub renormalization_delta: f64,
    /// Number of uniformized steps taken across all sub-intervals.
    pub terms: usize,
}

/// Largest uniformization horizon handled in one block.
const BLOCK: f64 = 30.0;
const TAIL: f64 = 1e-14;

/// `mu0 exp(t G)` by uniformization, splitting long horizons into blocks so
/// that the Poisson weights never underflow.
pub fn evolve_distribution<T: Scalar>(g: &GeneratorMatrix<T>, mu0: &[f64], t: f64) -> Result<Evolution> {
    if !(t >= 0.0) {
        return Err(Error::Param(format!("time {t} must be >= 0")));
    }
    let n = g.size();
    if mu0.len() != n {
        return Err(Error::Dimension(format!("distribution of length {} for {} states", mu0.len(), n)));
    }
    let total: f64 = mu0.iter().sum();
    if mu0.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Param("initial law must be a probability vector".into()));
    }
    let gf = g.to_f64();
    let lambda = gf.max_exit_rate();
    if t == 0.0 || lambda == 0.0 {
        return Ok(Evolution { distribution: mu0.to_vec(), renormalization_delta: 0.0, terms: 0 });
    }
    let blocks = (lambda * t / BLOCK).ceil().max(1.0) as usize;
    let h = t / blocks as f64;
    let lt = lambda * h;
    let mut mu = mu0.to_vec();
    let mut terms = 0;
    let mut next = vec![0.0; n];
    for _ in 0..blocks {
        let mut weight = (-lt).exp();
        let mut cumulative = weight;
        let mut power = mu.clone();
        let mut out: Vec<f64> = power.iter().map(|p| p * weight).collect();
        let mut k = 0usize;
        while 1.0 - cumulative > TAIL && k < 10_000 {
            // power <- power P, with P = I + G / lambda
            next.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..n {
                let p = power[i];
                if p == 0.0 {
                    continue;
                }
                next[i] += p * (1.0 + gf.diagonal(i) / lambda);
                for (j, r) in gf.off_diagonal(i) {
                    next[*j] += p * r / lambda;
                }
            }
            std::mem::swap(&mut power, &mut next);
            k += 1;
            weight *= lt / k as f64;
            cumulative += weight;
            for (o, p) in out.iter_mut().zip(&power) {
                *o += weight * p;
            }
        }
        terms += k;
        mu = out;
    }
    let mass: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|p| *p /= mass);
    Ok(Evolution { distribution: mu, renormalization_delta: mass - 1.0, terms })
}
