//! Clamped Euler-Maruyama integration of the stepping stone model and the
//! super random walk.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::config::{Config, Variant};
use crate::model::kernel::Kernel;
use crate::model::rates::{SrwParams, SsmParams};
use crate::rng::{Rng, Seed};
use crate::stochastic::gillespie::check_times;

/// Incoming migration weights `q(j, i)` for each `i`.
fn incoming(q: &Kernel<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..q.n_sites()).map(|i| q.in_neighbors(i).iter().map(|&j| (j, q.rate(j, i))).collect()).collect()
}

fn migration(incoming: &[(usize, f64)], x: &[f64], i: usize) -> f64 {
    incoming.iter().map(|&(j, w)| w * (x[j] - x[i])).sum()
}

/// One-step integrator shared by trajectory recording and replica runs.
pub trait Stepper: Sync {
    fn n_sites(&self) -> usize;

    /// Drift and squared diffusion coefficient at site `i`.
    fn coefficients(&self, x: &[f64], i: usize) -> (f64, f64);

    /// Projects a proposal back into the state space; true if it moved.
    fn clamp(&self, v: &mut f64) -> bool;

    /// One Euler-Maruyama step of length `dt`. Returns the number of clamped
    /// coordinates.
    fn step(&self, x: &mut [f64], dt: f64, rng: &mut Rng, buf: &mut Vec<f64>) -> u64 {
        buf.clear();
        let root = dt.sqrt();
        for i in 0..x.len() {
            let (drift, var) = self.coefficients(x, i);
            let noise: f64 = rng.sample(StandardNormal);
            buf.push(x[i] + drift * dt + var.max(0.0).sqrt() * root * noise);
        }
        let mut clamps = 0;
        for (xi, mut v) in x.iter_mut().zip(buf.iter().copied()) {
            if self.clamp(&mut v) {
                clamps += 1;
            }
            *xi = v;
        }
        clamps
    }

    /// Integrates from `*t` to `t_end`, the last step shortened to land on
    /// `t_end`. Returns `(steps, clamps)`.
    fn advance(&self, x: &mut [f64], t: &mut f64, t_end: f64, dt: f64, rng: &mut Rng, buf: &mut Vec<f64>) -> (u64, u64) {
        let (mut steps, mut clamps) = (0, 0);
        while t_end - *t > 1e-12 * t_end.max(1.0) {
            let h = dt.min(t_end - *t);
            clamps += self.step(x, h, rng, buf);
            steps += 1;
            *t += h;
        }
        *t = t_end;
        (steps, clamps)
    }
}

pub struct SsmStepper {
    p: SsmParams,
    incoming: Vec<Vec<(usize, f64)>>,
}

impl SsmStepper {
    pub fn new(p: SsmParams, q: &Kernel<f64>) -> Self {
        SsmStepper { p, incoming: incoming(q) }
    }
}

impl Stepper for SsmStepper {
    fn n_sites(&self) -> usize {
        self.incoming.len()
    }

    fn coefficients(&self, x: &[f64], i: usize) -> (f64, f64) {
        let v = x[i];
        let het = v * (1.0 - v);
        (migration(&self.incoming[i], x, i) + self.p.s * het - self.p.m * v, 2.0 * self.p.r * het)
    }

    fn clamp(&self, v: &mut f64) -> bool {
        let c = v.clamp(0.0, 1.0);
        let moved = c != *v;
        *v = c;
        moved
    }
}

pub struct SrwStepper {
    p: SrwParams,
    incoming: Vec<Vec<(usize, f64)>>,
}

impl SrwStepper {
    pub fn new(p: SrwParams, q: &Kernel<f64>) -> Self {
        SrwStepper { p, incoming: incoming(q) }
    }
}

impl Stepper for SrwStepper {
    fn n_sites(&self) -> usize {
        self.incoming.len()
    }

    fn coefficients(&self, z: &[f64], i: usize) -> (f64, f64) {
        let v = z[i];
        (migration(&self.incoming[i], z, i) + self.p.beta * v - self.p.gamma * v * v, self.p.variance_rate(v))
    }

    fn clamp(&self, v: &mut f64) -> bool {
        if *v < 0.0 {
            *v = 0.0;
            true
        } else {
            false
        }
    }
}

/// Sampled path of a diffusion, with step and clamp counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Config>,
    pub model: String,
    pub seed: Seed,
    pub dt: f64,
    pub steps: u64,
    pub clamp_events: u64,
}

impl SdeTrajectory {
    /// Clamped coordinates per coordinate update.
    pub fn clamp_fraction(&self) -> f64 {
        let n = self.states.first().map_or(1, |s| s.len().max(1));
        if self.steps == 0 {
            0.0
        } else {
            self.clamp_events as f64 / (self.steps * n as u64) as f64
        }
    }
}

fn run<S: Stepper>(
    stepper: &S,
    model: &str,
    x0: &Config,
    variant: Variant,
    t_end: f64,
    dt: f64,
    sample_times: &[f64],
    seed: Seed,
) -> Result<SdeTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Param(format!("time step {dt} must be > 0")));
    }
    if x0.variant() != variant || !x0.is_valid() {
        return Err(Error::Variant(format!("{model} needs a valid {variant:?} configuration")));
    }
    if x0.len() != stepper.n_sites() {
        return Err(Error::SiteMismatch { expected: stepper.n_sites(), got: x0.len() });
    }
    let times = check_times(t_end, sample_times)?;
    let mut x = x0.as_f64_vec();
    let mut rng = seed.rng();
    let mut buf = Vec::with_capacity(x.len());
    let (mut now, mut steps, mut clamps) = (0.0, 0, 0);
    let mut states = Vec::with_capacity(times.len());
    for &s in &times {
        let (a, b) = stepper.advance(&mut x, &mut now, s, dt, &mut rng, &mut buf);
        steps += a;
        clamps += b;
        states.push(match variant {
            Variant::UnitReal => Config::UnitReal(x.clone()),
            _ => Config::NonnegReal(x.clone()),
        });
    }
    Ok(SdeTrajectory { times, states, model: model.into(), seed, dt, steps, clamp_events: clamps })
}

/// Stepping stone path from `x0` in `[0,1]^n`.
pub fn simulate_ssm(
    p: &SsmParams,
    q: &Kernel<f64>,
    x0: &Config,
    t_end: f64,
    dt: f64,
    sample_times: &[f64],
    seed: Seed,
) -> Result<SdeTrajectory> {
    run(&SsmStepper::new(*p, q), "ssm", x0, Variant::UnitReal, t_end, dt, sample_times, seed)
}

/// Super random walk path from `z0` in `[0,inf)^n`.
pub fn simulate_srw(
    p: &SrwParams,
    q: &Kernel<f64>,
    z0: &Config,
    t_end: f64,
    dt: f64,
    sample_times: &[f64],
    seed: Seed,
) -> Result<SdeTrajectory> {
    let model = format!("srw[{}]", p.noise.name());
    run(&SrwStepper::new(*p, q), &model, z0, Variant::NonnegReal, t_end, dt, sample_times, seed)
}

/// End states at `t` of `n` independent paths from `x0`, plus total steps
/// and clamps.
pub(crate) fn terminal_states<S: Stepper>(
    stepper: &S,
    x0: &[f64],
    t: f64,
    dt: f64,
    n: usize,
    seed: Seed,
) -> (Vec<Vec<f64>>, u64, u64) {
    let runs = super::replicate(
        n,
        seed,
        || Vec::with_capacity(x0.len()),
        |buf, rng| {
            let mut x = x0.to_vec();
            let mut now = 0.0;
            let (steps, clamps) = stepper.advance(&mut x, &mut now, t, dt, rng, buf);
            (x, steps, clamps)
        },
    );
    let steps = runs.iter().map(|r| r.1).sum();
    let clamps = runs.iter().map(|r| r.2).sum();
    (runs.into_iter().map(|r| r.0).collect(), steps, clamps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rates::NoiseConvention;
    use crate::stochastic::stats::mean_se;

    #[test]
    fn pure_mutation_decays_deterministically() {
        let p = SsmParams::new(0.0, 0.0, 1.5).unwrap();
        let x0 = Config::unit_real(vec![0.8]).unwrap();
        let tr = simulate_ssm(&p, &Kernel::single(), &x0, 1.0, 1e-4, &[], Seed::new(3)).unwrap();
        let end = tr.states.last().unwrap().real().unwrap()[0];
        assert!((end - 0.8 * (-1.5f64).exp()).abs() < 1e-4);
        assert_eq!(tr.clamp_events, 0);
        assert_eq!(tr.steps, 10_000);
    }

    #[test]
    fn boundary_states_are_fixed() {
        let p = SsmParams::new(1.0, 0.0, 0.0).unwrap();
        for v in [0.0, 1.0] {
            let x0 = Config::unit_real(vec![v, v]).unwrap();
            let tr = simulate_ssm(&p, &Kernel::pair(), &x0, 1.0, 1e-3, &[0.5], Seed::new(1)).unwrap();
            assert!(tr.states.iter().all(|s| s.real().unwrap() == [v, v]));
        }
        let srw = SrwParams::new(1.0, 1.0, 1.0, NoiseConvention::SqrtAlpha).unwrap();
        let z0 = Config::nonneg_real(vec![0.0]).unwrap();
        let tr = simulate_srw(&srw, &Kernel::single(), &z0, 1.0, 1e-3, &[], Seed::new(1)).unwrap();
        assert_eq!(tr.states.last().unwrap().real().unwrap(), [0.0]);
    }

    #[test]
    fn linear_srw_mean() {
        let p = SrwParams::new(1.0, -1.0, 1e-12, NoiseConvention::SqrtTwoAlpha).unwrap();
        let (ends, _, _) = terminal_states(&SrwStepper::new(p, &Kernel::single()), &[2.0], 1.0, 1e-3, 4000, Seed::new(5));
        let vals: Vec<f64> = ends.iter().map(|e| e[0]).collect();
        let (m, se) = mean_se(&vals);
        assert!((m - 2.0 * (-1.0f64).exp()).abs() < 4.0 * se + 5e-3, "{m} +- {se}");
    }

    #[test]
    fn bad_step_and_variant() {
        let p = SsmParams::new(1.0, 1.0, 1.0).unwrap();
        let x0 = Config::unit_real(vec![0.5]).unwrap();
        assert!(simulate_ssm(&p, &Kernel::single(), &x0, 1.0, 0.0, &[], Seed::new(0)).is_err());
        let z0 = Config::nonneg_real(vec![0.5]).unwrap();
        assert!(simulate_ssm(&p, &Kernel::single(), &z0, 1.0, 1e-3, &[], Seed::new(0)).is_err());
        assert!(simulate_ssm(&p, &Kernel::pair(), &x0, 1.0, 1e-3, &[], Seed::new(0)).is_err());
    }
}
