//! Empirical time-t laws of jump models against their uniformized laws.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{build_generator, evolve_distribution, StateSpace};
use crate::model::kernel::Kernel;
use crate::model::spec::ModelSpec;
use crate::rng::Seed;
use crate::stochastic::gillespie::JumpSimulator;
use crate::stochastic::stats::ks_discrete;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawComparison {
    pub n_samples: usize,
    /// KS distance over the lexicographic state order.
    pub ks: f64,
    pub empirical: Vec<f64>,
    pub exact: Vec<f64>,
    /// Samples that left a truncated count space; they are placed after
    /// every state of the space, where the exact law has no mass.
    pub escaped: usize,
}

/// Runs `model` from `x0` to time `t` `n_samples` times and compares the
/// empirical law with `mu0 exp(t G)` on `space`.
pub fn law_comparison(
    model: &ModelSpec,
    q: &Kernel<f64>,
    space: StateSpace,
    x0: &[u32],
    t: f64,
    n_samples: usize,
    seed: Seed,
) -> Result<LawComparison> {
    if n_samples == 0 {
        return Err(Error::Param("need at least one sample".into()));
    }
    let start = space.index(x0).ok_or_else(|| Error::Variant(format!("{x0:?} is not a state of {space:?}")))?;
    let g = build_generator::<f64>(model, q, space, true)?;
    let mut mu0 = vec![0.0; space.size()];
    mu0[start] = 1.0;
    let exact = evolve_distribution(&g, &mu0, t)?.distribution;
    let local = model.local_generator::<f64>(q, true)?;
    let ends = super::replicate(n_samples, seed, || JumpSimulator::new(local.as_ref()), |sim, rng| {
        space.index(&sim.sample_at(x0, t, rng))
    });
    let mut counts = vec![0u64; space.size() + 1];
    for e in &ends {
        counts[e.unwrap_or(space.size())] += 1;
    }
    let mut reference = exact.clone();
    reference.push(0.0);
    let ks = ks_discrete(&counts, &reference);
    let empirical = counts[..space.size()].iter().map(|&c| c as f64 / n_samples as f64).collect();
    Ok(LawComparison { n_samples, ks, empirical, exact, escaped: counts[space.size()] as usize })
}
