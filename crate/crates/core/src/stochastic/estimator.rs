//! Monte Carlo estimates of the two sides of a duality relation.

use serde::Serialize;

use crate::duality::ssm_bps_dual;
use crate::error::{Error, Result};
use crate::exact::{build_generator, evolve_distribution, StateSpace};
use crate::model::config::{Config, Variant};
use crate::model::jumps::{BpsProcess, LocalGenerator};
use crate::model::kernel::Kernel;
use crate::model::rates::SsmParams;
use crate::model::spec::ModelSpec;
use crate::rng::Seed;
use crate::stochastic::gillespie::JumpSimulator;
use crate::stochastic::sde::{terminal_states, SsmStepper};
use crate::stochastic::stats::EstimatorPair;

/// `prod_i eta^(x(i) y(i))`, with `0^0 = 1`.
pub fn psi_eta(x: &[u32], y: &[u32], eta: f64) -> f64 {
    let k: u64 = x.iter().zip(y).map(|(a, b)| (*a as u64) * (*b as u64)).sum();
    eta.powi(k as i32)
}

/// `prod_i (1 - kappa x(i))^y(i)`.
pub fn psi_ssm_bps(x: &[f64], y: &[u32], kappa: f64) -> f64 {
    x.iter().zip(y).map(|(v, &n)| (1.0 - kappa * v).powi(n as i32)).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalEstimate {
    pub pair: EstimatorPair,
    pub eta: f64,
    /// Duality functions with `|eta| > 1` are unbounded on infinite
    /// lattices; on finite ones they are still admissible.
    pub eta_exceeds_unit: bool,
}

fn discrete<'a>(c: &'a Config, gen: &dyn LocalGenerator<f64>, what: &str) -> Result<&'a [u32]> {
    let x = c
        .discrete()
        .filter(|_| c.variant() == gen.variant() && c.is_valid())
        .ok_or_else(|| Error::Variant(format!("{what} must be a valid {:?} configuration", gen.variant())))?;
    if x.len() != gen.n_sites() {
        return Err(Error::SiteMismatch { expected: gen.n_sites(), got: x.len() });
    }
    Ok(x)
}

/// Runs `model_a` from `x0` and, independently, `model_b` from `y0`, and
/// averages `psi_eta(X_t, y0)` against `psi_eta(x0, Y_t)`. Both processes
/// move along `q`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_duality_functional(
    model_a: &ModelSpec,
    model_b: &ModelSpec,
    q: &Kernel<f64>,
    x0: &Config,
    y0: &Config,
    eta: f64,
    t: f64,
    n_samples: usize,
    seed: Seed,
) -> Result<FunctionalEstimate> {
    if !(t >= 0.0) || n_samples == 0 {
        return Err(Error::Param("need t >= 0 and at least one sample".into()));
    }
    let ga = model_a.local_generator::<f64>(q, true)?;
    let gb = model_b.local_generator::<f64>(q, true)?;
    let x0 = discrete(x0, ga.as_ref(), "x0")?;
    let y0 = discrete(y0, gb.as_ref(), "y0")?;
    let run = |g: &dyn LocalGenerator<f64>, start: &[u32], frozen: &[u32], flip: bool, s: Seed| {
        super::replicate(
            n_samples,
            s,
            || JumpSimulator::new(g),
            |sim, rng| {
                let end = sim.sample_at(start, t, rng);
                if flip {
                    psi_eta(frozen, &end, eta)
                } else {
                    psi_eta(&end, frozen, eta)
                }
            },
        )
    };
    let lhs = run(ga.as_ref(), x0, y0, false, seed.child(0));
    let rhs = run(gb.as_ref(), y0, x0, true, seed.child(1));
    Ok(FunctionalEstimate { pair: EstimatorPair::from_samples(&lhs, &rhs), eta, eta_exceeds_unit: eta.abs() > 1.0 })
}

/// `E[psi_eta(X_t, y0)]` from the uniformized law of the spin model `model`
/// started at `x0`.
pub fn exact_duality_functional(model: &ModelSpec, q: &Kernel<f64>, x0: &[u32], y0: &[u32], eta: f64, t: f64) -> Result<f64> {
    let space = StateSpace::spin(q.n_sites())?;
    let g = build_generator(model, q, space, true)?;
    let start = space.index(x0).ok_or_else(|| Error::Variant("x0 is not a spin configuration".into()))?;
    let mut mu0 = vec![0.0; space.size()];
    mu0[start] = 1.0;
    let ev = evolve_distribution(&g, &mu0, t)?;
    Ok(ev.distribution.iter().enumerate().map(|(k, p)| p * psi_eta(&space.config(k), y0, eta)).sum())
}

/// Stepping stone model from `x0` against its branching dual from `y0`,
/// through `prod_i (1-(1+eps) x(i))^y(i)`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ssm_bps_functional(
    p: &SsmParams,
    eps: f64,
    q: &Kernel<f64>,
    x0: &[f64],
    y0: &[u32],
    t: f64,
    dt: f64,
    n_samples: usize,
    seed: Seed,
) -> Result<EstimatorPair> {
    let n = q.n_sites();
    if x0.len() != n || y0.len() != n {
        return Err(Error::SiteMismatch { expected: n, got: if x0.len() != n { x0.len() } else { y0.len() } });
    }
    Config::unit_real(x0.to_vec())?;
    if !(dt > 0.0) || !(t >= 0.0) || n_samples == 0 {
        return Err(Error::Param("need dt > 0, t >= 0 and at least one sample".into()));
    }
    let bps = BpsProcess::new(ssm_bps_dual(p, eps)?, q.clone());
    let kappa = 1.0 + eps;
    let (ends, _, _) = terminal_states(&SsmStepper::new(*p, q), x0, t, dt, n_samples, seed.child(0));
    let lhs: Vec<f64> = ends.iter().map(|x| psi_ssm_bps(x, y0, kappa)).collect();
    let rhs = super::replicate(
        n_samples,
        seed.child(1),
        || JumpSimulator::new(&bps),
        |sim, rng| psi_ssm_bps(x0, &sim.sample_at(y0, t, rng), kappa),
    );
    debug_assert_eq!(bps.variant(), Variant::Count);
    Ok(EstimatorPair::from_samples(&lhs, &rhs))
}
