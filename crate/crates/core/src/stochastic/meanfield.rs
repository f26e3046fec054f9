//! Local mean-field experiments: colony lattices with growing colony size
//! against their diffusion and branching limits.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::duality::ssm_bps_dual;
use crate::error::{Error, Result};
use crate::model::jumps::{BpsProcess, LocalGenerator};
use crate::model::kernel::Kernel;
use crate::model::rates::{CvpParams, NoiseConvention, RwParams, SrwParams, SsmParams};
use crate::rng::Seed;
use crate::stochastic::gillespie::JumpSimulator;
use crate::stochastic::lumped::{LumpedCvp, LumpedRw};
use crate::stochastic::sde::{terminal_states, SrwStepper, SsmStepper};
use crate::stochastic::stats::{ks_bootstrap_sigma, ks_two_sample, mean_se, z_score};

/// Rate scalings of the colony approximations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeanFieldScaling {
    /// Contact-voter colonies approaching a stepping stone model.
    CvpLimit { n: u32, nu: f64, r_n: f64 },
    /// Contact-process colonies approaching a super random walk.
    SrwLimit { n: u32, s_n: f64, nu: f64, m_n: f64, phi: f64 },
}

impl MeanFieldScaling {
    /// `nu = 1/(rN)`, `r_N = rN`.
    pub fn cvp_limit(r: f64, n: u32) -> Result<Self> {
        if !(r > 0.0) || n < 2 {
            return Err(Error::Param(format!("need r > 0 and N >= 2, got r = {r}, N = {n}")));
        }
        let r_n = r * n as f64;
        if r_n < 1.0 {
            return Err(Error::Param(format!("nu = 1/(rN) = {} exceeds 1", 1.0 / r_n)));
        }
        Ok(MeanFieldScaling::CvpLimit { n, nu: 1.0 / r_n, r_n })
    }

    /// `s_N = sqrt(alpha gamma N)`, `nu = 1/s_N`, `m_N = s_N - beta`,
    /// `phi = sqrt(alpha/gamma)`.
    pub fn srw_limit(p: &SrwParams, n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Param(format!("colony size {n} must be >= 2")));
        }
        let s_n = (p.alpha * p.gamma * n as f64).sqrt();
        if p.beta >= s_n {
            return Err(Error::Precondition(format!("beta = {} must stay below s_N = {s_n}", p.beta)));
        }
        if s_n < 1.0 {
            return Err(Error::Param(format!("nu = 1/s_N = {} exceeds 1", 1.0 / s_n)));
        }
        Ok(MeanFieldScaling::SrwLimit { n, s_n, nu: 1.0 / s_n, m_n: s_n - p.beta, phi: (p.alpha / p.gamma).sqrt() })
    }

    pub fn n(&self) -> u32 {
        match *self {
            MeanFieldScaling::CvpLimit { n, .. } | MeanFieldScaling::SrwLimit { n, .. } => n,
        }
    }

    pub fn nu(&self) -> f64 {
        match *self {
            MeanFieldScaling::CvpLimit { nu, .. } | MeanFieldScaling::SrwLimit { nu, .. } => nu,
        }
    }

    /// Migration fraction actually used on `q`: with a single colony there is
    /// nowhere to migrate, so it is zero.
    pub fn effective_nu(&self, q: &Kernel<f64>) -> f64 {
        if q.n_sites() == 1 {
            0.0
        } else {
            self.nu()
        }
    }
}

fn check_sizes(sizes: &[u32]) -> Result<()> {
    if sizes.is_empty() || sizes.iter().any(|&n| n < 2) {
        return Err(Error::Param("colony sizes must be >= 2".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldCvConfig {
    pub ssm: SsmParams,
    /// Colony means of the i.i.d. Bernoulli initial states.
    pub x0: Vec<f64>,
    pub sizes: Vec<u32>,
    pub t: f64,
    pub n_samples: usize,
    /// The diffusion reference uses this many times `n_samples` paths.
    pub reference_factor: usize,
    pub dt: f64,
    pub bootstrap: usize,
    /// Colony whose law is compared.
    pub observe: usize,
    /// Also run the particle-count branch against the branching limit,
    /// starting from these colony counts, with this `eps`.
    pub branching: Option<(f64, Vec<u32>)>,
    pub seed: Seed,
}

impl MeanFieldCvConfig {
    pub fn new(ssm: SsmParams, x0: Vec<f64>, sizes: Vec<u32>, t: f64, n_samples: usize, seed: Seed) -> Self {
        MeanFieldCvConfig {
            ssm,
            x0,
            sizes,
            t,
            n_samples,
            reference_factor: 10,
            dt: 1e-3,
            bootstrap: 200,
            observe: 0,
            branching: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsRow {
    pub n: u32,
    pub ks: f64,
    /// Bootstrap standard deviation of `ks`.
    pub ks_sigma: f64,
    pub mean: f64,
    pub reference_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: u32,
    pub mean: f64,
    pub mean_se: f64,
    pub second: f64,
    pub second_se: f64,
    pub z_mean: f64,
    pub z_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldCvReport {
    pub rows: Vec<KsRow>,
    pub reference_samples: usize,
    pub reference_clamp_fraction: f64,
    /// Each KS distance exceeds the next by more than twice the combined
    /// bootstrap deviation.
    pub decreasing_beyond_noise: bool,
    pub branching_rows: Vec<MomentRow>,
    pub branching_reference: Option<(f64, f64, f64, f64)>,
}

fn moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let (m, se) = mean_se(values);
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    let (m2, se2) = mean_se(&sq);
    (m, se, m2, se2)
}

/// `K/N` or raw counts of colony `observe` at time `t` for `n` replicas of a
/// lumped chain, initial counts drawn by `init`.
fn lumped_samples<G: LocalGenerator<f64>>(
    chain: &G,
    init: &(dyn Fn(&mut crate::rng::Rng) -> Vec<u32> + Sync),
    observe: usize,
    t: f64,
    n: usize,
    seed: Seed,
) -> Vec<u32> {
    super::replicate(n, seed, || JumpSimulator::new(chain), |sim, rng| sim.sample_at(&init(rng), t, rng)[observe])
}

/// Stepping stone limit of contact-voter colonies.
pub fn meanfield_cv_experiment(q: &Kernel<f64>, cfg: &MeanFieldCvConfig) -> Result<MeanFieldCvReport> {
    check_sizes(&cfg.sizes)?;
    let n_col = q.n_sites();
    if cfg.x0.len() != n_col || cfg.observe >= n_col {
        return Err(Error::SiteMismatch { expected: n_col, got: cfg.x0.len() });
    }
    if cfg.x0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Param("colony means must lie in [0,1]".into()));
    }
    if cfg.n_samples < 2 || !(cfg.t >= 0.0) || !(cfg.dt > 0.0) {
        return Err(Error::Param("need n_samples >= 2, t >= 0 and dt > 0".into()));
    }
    let p = cfg.ssm;
    let n_ref = cfg.n_samples * cfg.reference_factor.max(1);
    let (ends, steps, clamps) = terminal_states(&SsmStepper::new(p, q), &cfg.x0, cfg.t, cfg.dt, n_ref, cfg.seed.child(0));
    let reference: Vec<f64> = ends.iter().map(|x| x[cfg.observe]).collect();
    let (reference_mean, _) = mean_se(&reference);

    let mut rows = Vec::new();
    for (k, &n) in cfg.sizes.iter().enumerate() {
        let sc = MeanFieldScaling::cvp_limit(p.r, n)?;
        let MeanFieldScaling::CvpLimit { r_n, .. } = sc else { unreachable!() };
        let chain = LumpedCvp::new(CvpParams::new(r_n, p.s, p.m)?, q, n, sc.effective_nu(q))?;
        let laws: Vec<Binomial> = cfg.x0.iter().map(|&x| Binomial::new(n as u64, x).expect("mean in [0,1]")).collect();
        let init = |rng: &mut crate::rng::Rng| laws.iter().map(|b| b.sample(rng) as u32).collect();
        let seed = cfg.seed.child(1 + k as u64);
        let counts = lumped_samples(&chain, &init, cfg.observe, cfg.t, cfg.n_samples, seed);
        let sample: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let ks = ks_two_sample(&sample, &reference);
        let ks_sigma = ks_bootstrap_sigma(&sample, &reference, cfg.bootstrap, seed.child(u64::MAX));
        rows.push(KsRow { n, ks, ks_sigma, mean: mean_se(&sample).0, reference_mean });
    }
    let decreasing_beyond_noise =
        rows.windows(2).all(|w| w[0].ks - w[1].ks > 2.0 * w[0].ks_sigma.hypot(w[1].ks_sigma));

    let mut branching_rows = Vec::new();
    let mut branching_reference = None;
    if let Some((eps, y0)) = &cfg.branching {
        if y0.len() != n_col {
            return Err(Error::SiteMismatch { expected: n_col, got: y0.len() });
        }
        let bps = BpsProcess::new(ssm_bps_dual(&p, *eps)?, q.clone());
        let limit = lumped_samples(&bps, &|_| y0.clone(), cfg.observe, cfg.t, n_ref, cfg.seed.child(100));
        let limit: Vec<f64> = limit.into_iter().map(f64::from).collect();
        let (lm, lse, l2, l2se) = moments(&limit);
        branching_reference = Some((lm, lse, l2, l2se));
        let shed = eps * p.s / (1.0 + eps);
        for (k, &n) in cfg.sizes.iter().enumerate() {
            if y0.iter().any(|&y| y > n) {
                return Err(Error::Param(format!("initial count exceeds colony size {n}")));
            }
            let sc = MeanFieldScaling::cvp_limit(p.r, n)?;
            let MeanFieldScaling::CvpLimit { r_n, .. } = sc else { unreachable!() };
            let rw = RwParams::new(*eps, r_n + shed, p.s / (1.0 + eps), (p.m - shed).max(0.0))?;
            let chain = LumpedRw::new(rw, q, n, sc.effective_nu(q))?;
            let counts = lumped_samples(&chain, &|_| y0.clone(), cfg.observe, cfg.t, cfg.n_samples, cfg.seed.child(101 + k as u64));
            let vals: Vec<f64> = counts.into_iter().map(f64::from).collect();
            let (m, se, m2, se2) = moments(&vals);
            branching_rows.push(MomentRow {
                n,
                mean: m,
                mean_se: se,
                second: m2,
                second_se: se2,
                z_mean: z_score(m, se, lm, lse),
                z_second: z_score(m2, se2, l2, l2se),
            });
        }
    }

    Ok(MeanFieldCvReport {
        rows,
        reference_samples: n_ref,
        reference_clamp_fraction: if steps == 0 { 0.0 } else { clamps as f64 / (steps * n_col as u64) as f64 },
        decreasing_beyond_noise,
        branching_rows,
        branching_reference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSrwConfig {
    /// Noise convention is ignored: both are compared.
    pub srw: SrwParams,
    pub z0: f64,
    pub sizes: Vec<u32>,
    /// Horizon of the small-time increment measurements.
    pub horizon: f64,
    pub t: f64,
    pub n_samples: usize,
    pub dt: f64,
    pub seed: Seed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrwRow {
    pub n: u32,
    pub initial_count: u32,
    /// Colony mass actually started from, `phi K0 / sqrt(N)`.
    pub z: f64,
    pub variance_rate: f64,
    pub variance_rate_se: f64,
    pub drift: f64,
    pub drift_se: f64,
    pub drift_predicted: f64,
    pub drift_z: f64,
    /// `|z|` of the measured variance rate against `alpha z` and `2 alpha z`.
    pub z_alpha: f64,
    pub z_two_alpha: f64,
    /// KS distance at `t` against each convention.
    pub ks_alpha: f64,
    pub ks_two_alpha: f64,
}

pub const REJECT_Z: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSrwReport {
    pub rows: Vec<SrwRow>,
    /// Convention closer to the measured variance rate in every row, provided
    /// the other is rejected at more than `REJECT_Z` in every row.
    pub selected: Option<NoiseConvention>,
    /// Convention with the smaller KS distance at the largest `N`.
    pub ks_favoured: NoiseConvention,
}

/// Super random walk limit of contact-process colonies (one colony).
pub fn meanfield_srw_experiment(cfg: &MeanFieldSrwConfig) -> Result<MeanFieldSrwReport> {
    check_sizes(&cfg.sizes)?;
    let p = cfg.srw;
    if !(cfg.z0 >= 0.0) || !(cfg.horizon > 0.0) || !(cfg.t > 0.0) || cfg.n_samples < 2 || !(cfg.dt > 0.0) {
        return Err(Error::Param("need z0 >= 0, positive horizon, t, dt and n_samples >= 2".into()));
    }
    let q = Kernel::single();
    let mut rows = Vec::new();
    for (k, &n) in cfg.sizes.iter().enumerate() {
        let sc = MeanFieldScaling::srw_limit(&p, n)?;
        let MeanFieldScaling::SrwLimit { s_n, m_n, phi, .. } = sc else { unreachable!() };
        let root = (n as f64).sqrt();
        let k0 = (cfg.z0 * root / phi).round();
        if k0 > n as f64 {
            return Err(Error::Param(format!("z0 = {} needs more than N = {n} occupied members", cfg.z0)));
        }
        let k0 = k0 as u32;
        let z = phi * k0 as f64 / root;
        let chain = LumpedCvp::new(CvpParams::new(0.0, s_n, m_n)?, &q, n, 0.0)?;
        let scale = |c: u32| phi * c as f64 / root;
        let seed = cfg.seed.child(k as u64);
        let short = lumped_samples(&chain, &|_| vec![k0], 0, cfg.horizon, cfg.n_samples, seed.child(0));
        let incr: Vec<f64> = short.iter().map(|&c| scale(c) - z).collect();
        let (dm, dse) = mean_se(&incr);
        let centred: Vec<f64> = incr.iter().map(|d| (d - dm).powi(2)).collect();
        let (var, var_se) = mean_se(&centred);
        let variance_rate = var / cfg.horizon;
        let variance_rate_se = var_se / cfg.horizon;
        let drift = dm / cfg.horizon;
        let drift_se = dse / cfg.horizon;
        let drift_predicted = p.beta * z - p.gamma * z * z;

        let long = lumped_samples(&chain, &|_| vec![k0], 0, cfg.t, cfg.n_samples, seed.child(1));
        let long: Vec<f64> = long.into_iter().map(scale).collect();
        let mut ks = [0.0; 2];
        for (slot, noise) in NoiseConvention::ALL.into_iter().enumerate() {
            let sp = SrwParams { noise, ..p };
            let (ends, _, _) = terminal_states(&SrwStepper::new(sp, &q), &[z], cfg.t, cfg.dt, cfg.n_samples, seed.child(2 + slot as u64));
            let ends: Vec<f64> = ends.into_iter().map(|e| e[0]).collect();
            ks[slot] = ks_two_sample(&long, &ends);
        }
        rows.push(SrwRow {
            n,
            initial_count: k0,
            z,
            variance_rate,
            variance_rate_se,
            drift,
            drift_se,
            drift_predicted,
            drift_z: z_score(drift, drift_se, drift_predicted, 0.0),
            z_alpha: z_score(variance_rate, variance_rate_se, p.alpha * z, 0.0),
            z_two_alpha: z_score(variance_rate, variance_rate_se, 2.0 * p.alpha * z, 0.0),
            ks_alpha: ks[0],
            ks_two_alpha: ks[1],
        });
    }
    // each row must prefer the same convention and reject the other
    let prefers = |r: &SrwRow| if r.z_alpha < r.z_two_alpha { NoiseConvention::SqrtAlpha } else { NoiseConvention::SqrtTwoAlpha };
    let rejected = |r: &SrwRow| r.z_alpha.max(r.z_two_alpha) > REJECT_Z;
    let first = prefers(&rows[0]);
    let selected = rows.iter().all(|r| prefers(r) == first && rejected(r)).then_some(first);
    let last = rows.last().expect("at least one size");
    let ks_favoured = if last.ks_alpha < last.ks_two_alpha { NoiseConvention::SqrtAlpha } else { NoiseConvention::SqrtTwoAlpha };
    Ok(MeanFieldSrwReport { rows, selected, ks_favoured })
}
