//! Monte Carlo engines: exact jump simulation, SDE integration, the
//! generator-identity oracle, and the mean-field and Poissonization checks.

pub mod estimator;
pub mod gillespie;
pub mod law;
pub mod lumped;
pub mod meanfield;
pub mod oracle;
pub mod poisson;
pub mod sde;
pub mod stats;

pub use estimator::{
    estimate_duality_functional, estimate_ssm_bps_functional, exact_duality_functional, psi_eta, psi_ssm_bps, FunctionalEstimate,
};
pub use gillespie::{simulate_jump_process, JumpSimulator, SumTree, Trajectory};
pub use law::{law_comparison, LawComparison};
pub use lumped::{LumpedCvp, LumpedRw};
pub use meanfield::{
    meanfield_cv_experiment, meanfield_srw_experiment, MeanFieldCvConfig, MeanFieldCvReport, MeanFieldScaling,
    MeanFieldSrwConfig, MeanFieldSrwReport, KsRow, MomentRow, SrwRow,
};
pub use oracle::{generator_identity_oracle, ssm_self_constant, OracleFamily, OracleOptions, OracleReport, OracleStatus};
pub use poisson::{bps_thinning_check, poissonization_check, MomentComparison, PoissonCheck, PoissonCheckConfig, WeightOutcome};
pub use sde::{simulate_srw, simulate_ssm, SdeTrajectory, SrwStepper, SsmStepper, Stepper};
pub use stats::EstimatorPair;

use rayon::prelude::*;

use crate::rng::{Rng, Seed};

/// Runs `n` independent replicas, replica `i` drawing from `seed.child(i)`.
/// Results come back in replica order whatever the thread count.
pub(crate) fn replicate<S, R, I, F>(n: usize, seed: Seed, init: I, f: F) -> Vec<R>
where
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut Rng) -> R + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map_init(init, |state, i| {
            let mut rng = seed.child(i as u64).rng();
            f(state, &mut rng)
        })
        .collect()
}
