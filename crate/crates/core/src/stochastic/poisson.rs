//! Poissonization of the stepping stone model by its branching duals, and
//! thinning between those duals.
//!
//! The Poissonized and thinned sides are averaged through their conditional
//! moments given the underlying state (Poisson mean, second moment and zero
//! probability are closed-form), which is unbiased and lowers the variance.

use serde::{Deserialize, Serialize};

use crate::duality::{poissonization_weight, ssm_bps_dual, PoissonizationWeight};
use crate::error::{Error, Result};
use crate::model::jumps::BpsProcess;
use crate::model::kernel::Kernel;
use crate::model::rates::SsmParams;
use crate::rng::Seed;
use crate::stochastic::gillespie::JumpSimulator;
use crate::stochastic::sde::{terminal_states, SsmStepper};
use crate::stochastic::stats::EstimatorPair;
use crate::thinning::poisson_field_with;

/// Mean, second moment and zero probability of the total count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentComparison {
    pub mean: EstimatorPair,
    pub second: EstimatorPair,
    pub zero: EstimatorPair,
}

impl MomentComparison {
    fn from_columns(lhs: &[[f64; 3]], rhs: &[[f64; 3]]) -> Self {
        let col = |v: &[[f64; 3]], k: usize| -> Vec<f64> { v.iter().map(|r| r[k]).collect() };
        MomentComparison {
            mean: EstimatorPair::from_samples(&col(lhs, 0), &col(rhs, 0)),
            second: EstimatorPair::from_samples(&col(lhs, 1), &col(rhs, 1)),
            zero: EstimatorPair::from_samples(&col(lhs, 2), &col(rhs, 2)),
        }
    }

    pub fn z_scores(&self) -> [f64; 3] {
        [self.mean.z_score, self.second.z_score, self.zero.z_score]
    }

    pub fn max_z(&self) -> f64 {
        self.z_scores().into_iter().fold(0.0, f64::max)
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.max_z() < threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheckConfig {
    pub x0: Vec<f64>,
    pub t: f64,
    pub n_samples: usize,
    pub dt: f64,
    pub seed: Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightOutcome {
    pub weight: f64,
    /// Branching run (lhs) against the Poissonized diffusion (rhs).
    pub comparison: MomentComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonCheck {
    pub eps: f64,
    pub weights: PoissonizationWeight,
    pub oracle: WeightOutcome,
    pub stated: WeightOutcome,
}

fn count_row(y: &[u32]) -> [f64; 3] {
    let total: u32 = y.iter().sum();
    let t = total as f64;
    [t, t * t, if total == 0 { 1.0 } else { 0.0 }]
}

/// Runs the branching dual from `Pois(w x0)` and the stepping stone model
/// from `x0`, Poissonized with weight `w`, for both the oracle weight and
/// the stated one.
pub fn poissonization_check(p: &SsmParams, eps: f64, q: &Kernel<f64>, cfg: &PoissonCheckConfig) -> Result<PoissonCheck> {
    let n = q.n_sites();
    if cfg.x0.len() != n {
        return Err(Error::SiteMismatch { expected: n, got: cfg.x0.len() });
    }
    if cfg.x0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Param("x0 must lie in [0,1]".into()));
    }
    if cfg.n_samples < 2 || !(cfg.t >= 0.0) || !(cfg.dt > 0.0) {
        return Err(Error::Param("need n_samples >= 2, t >= 0 and dt > 0".into()));
    }
    let bps = BpsProcess::new(ssm_bps_dual(p, eps)?, q.clone());
    let weights = poissonization_weight(p, eps)?;
    let (ends, _, _) = terminal_states(&SsmStepper::new(*p, q), &cfg.x0, cfg.t, cfg.dt, cfg.n_samples, cfg.seed.child(0));

    let outcome = |w: f64, tag: u64| -> WeightOutcome {
        let start: Vec<f64> = cfg.x0.iter().map(|x| w * x).collect();
        let lhs = super::replicate(
            cfg.n_samples,
            cfg.seed.child(tag),
            || JumpSimulator::new(&bps),
            |sim, rng| {
                let y0 = poisson_field_with(&start, rng).expect("finite intensities");
                count_row(&sim.sample_at(y0.discrete().unwrap(), cfg.t, rng))
            },
        );
        let rhs: Vec<[f64; 3]> = ends
            .iter()
            .map(|x| {
                let lambda: f64 = x.iter().map(|v| w * v).sum();
                [lambda, lambda + lambda * lambda, (-lambda).exp()]
            })
            .collect();
        WeightOutcome { weight: w, comparison: MomentComparison::from_columns(&lhs, &rhs) }
    };
    Ok(PoissonCheck { eps, oracle: outcome(weights.weight, 1), stated: outcome(weights.stated, 2), weights })
}

/// Compares `Thin_v` of the `eps` branching dual with the `eps_prime` one,
/// `v = (1+eps)/(1+eps_prime)`, the latter started from `Thin_v(y0)`.
pub fn bps_thinning_check(
    p: &SsmParams,
    eps: f64,
    eps_prime: f64,
    q: &Kernel<f64>,
    y0: &[u32],
    t: f64,
    n_samples: usize,
    seed: Seed,
) -> Result<MomentComparison> {
    if !(eps <= eps_prime) {
        return Err(Error::Param(format!("need eps = {eps} <= eps' = {eps_prime}")));
    }
    if y0.len() != q.n_sites() {
        return Err(Error::SiteMismatch { expected: q.n_sites(), got: y0.len() });
    }
    if n_samples < 2 || !(t >= 0.0) {
        return Err(Error::Param("need n_samples >= 2 and t >= 0".into()));
    }
    let v = (1.0 + eps) / (1.0 + eps_prime);
    let coarse = BpsProcess::new(ssm_bps_dual(p, eps)?, q.clone());
    let fine = BpsProcess::new(ssm_bps_dual(p, eps_prime)?, q.clone());
    let lhs = super::replicate(
        n_samples,
        seed.child(0),
        || JumpSimulator::new(&coarse),
        |sim, rng| {
            let y = sim.sample_at(y0, t, rng);
            let total: u32 = y.iter().sum();
            let m = v * total as f64;
            let zero = y.iter().map(|&k| (1.0 - v).powi(k as i32)).product();
            [m, m * (1.0 - v) + m * m, zero]
        },
    );
    let profile = crate::thinning::ThinningProfile::uniform(v)?;
    let start = crate::model::config::Config::count(y0.to_vec());
    let rhs = super::replicate(
        n_samples,
        seed.child(1),
        || JumpSimulator::new(&fine),
        |sim, rng| {
            let thinned = crate::thinning::thin_with(&start, &profile, rng).expect("count configuration");
            count_row(&sim.sample_at(thinned.discrete().unwrap(), t, rng))
        },
    );
    Ok(MomentComparison::from_columns(&lhs, &rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_zero_weights() {
        let p = SsmParams::new(1.0, 2.0, 0.0).unwrap();
        let cfg = PoissonCheckConfig { x0: vec![0.5], t: 0.0, n_samples: 20_000, dt: 1e-3, seed: Seed::new(3) };
        let rep = poissonization_check(&p, 0.0, &Kernel::single(), &cfg).unwrap();
        assert!((rep.weights.weight - 2.0).abs() < 1e-6);
        assert_eq!(rep.weights.stated, 0.5);
        // at t = 0 both sides are Pois(w x0) by construction
        assert!(rep.oracle.comparison.passes(4.0), "{:?}", rep.oracle);
        assert!(rep.stated.comparison.passes(4.0), "{:?}", rep.stated);
    }

    #[test]
    fn precondition_on_mutation() {
        let p = SsmParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(bps_thinning_check(&p, 0.0, 1.0, &Kernel::single(), &[3], 0.5, 10, Seed::new(1)).is_err());
        let cfg = PoissonCheckConfig { x0: vec![0.5], t: 0.1, n_samples: 10, dt: 1e-3, seed: Seed::new(3) };
        assert!(poissonization_check(&p, 1.0, &Kernel::single(), &cfg).is_err());
    }
}
