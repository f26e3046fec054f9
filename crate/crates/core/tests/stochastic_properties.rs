use lsmdual_core::exact::StateSpace;
use lsmdual_core::model::{Config, Kernel, ModelSpec, NoiseConvention, SrwParams, SsmParams};
use lsmdual_core::rng::{Rng, Seed};
use lsmdual_core::stochastic::stats::mean_se;
use lsmdual_core::stochastic::{
    estimate_duality_functional, estimate_ssm_bps_functional, law_comparison, psi_ssm_bps, simulate_jump_process, simulate_srw,
    simulate_ssm, JumpSimulator, SrwStepper, SsmStepper, Stepper,
};
use rand::Rng as _;
use rand_distr::StandardNormal;

fn model(text: &str) -> ModelSpec {
    ModelSpec::from_shorthand(text).unwrap()
}

#[test]
fn jump_laws_match_uniformization_on_two_sites() {
    let n = 100_000;
    let spin = StateSpace::spin(2).unwrap();
    let cases = [
        ("lsm:1,2,1,3,1", spin, vec![1, 0], 0.7),
        ("cvp:1,3,2", spin, vec![1, 1], 0.5),
        ("rw:1,1,1/2,1/2", spin, vec![1, 1], 0.6),
        ("bps:1/2,1,1,1", StateSpace::count(2, 16).unwrap(), vec![2, 1], 0.5),
    ];
    for (k, (text, space, x0, t)) in cases.into_iter().enumerate() {
        let c = law_comparison(&model(text), &Kernel::pair(), space, &x0, t, n, Seed::with_stream(8, k as u64)).unwrap();
        assert_eq!(c.escaped, 0, "{text}");
        assert!(c.ks < 0.015, "{text}: KS = {}", c.ks);
    }
}

#[test]
fn pure_death_survival_is_exponential() {
    let m = model("bps:0,0,0,1");
    let g = m.local_generator::<f64>(&Kernel::single(), true).unwrap();
    let mut sim = JumpSimulator::new(g.as_ref());
    let mut rng = Seed::new(3).rng();
    let n = 100_000;
    let alive = (0..n).filter(|_| sim.sample_at(&[1], 1.0, &mut rng)[0] == 1).count();
    let p = (-1.0f64).exp();
    let freq = alive as f64 / n as f64;
    assert!((freq - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{freq} vs {p}");
}

#[test]
fn voter_pair_fixates_on_either_opinion_equally() {
    let m = model("cvp:1,0,0");
    let q = Kernel::pair();
    let g = m.local_generator::<f64>(&q, true).unwrap();
    let mut sim = JumpSimulator::new(g.as_ref());
    let mut rng = Seed::new(4).rng();
    let n = 40_000;
    let mut ones = 0;
    for _ in 0..n {
        let end = sim.sample_at(&[1, 0], 60.0, &mut rng);
        assert!(end[0] == end[1], "not absorbed: {end:?}");
        ones += end[0] as usize;
    }
    let freq = ones as f64 / n as f64;
    assert!((freq - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{freq}");
}

#[test]
fn identical_seeds_reproduce_trajectories() {
    let q = Kernel::ring(4);
    let x0 = Config::spin(vec![1, 0, 1, 1]).unwrap();
    let a = simulate_jump_process(&model("cvp:1,3,2"), &q, &x0, 2.0, &[0.5, 1.0], Seed::new(9)).unwrap();
    let b = simulate_jump_process(&model("cvp:1,3,2"), &q, &x0, 2.0, &[0.5, 1.0], Seed::new(9)).unwrap();
    assert_eq!(a, b);
    let p = SsmParams::new(1.0, 1.0, 0.0).unwrap();
    let x0 = Config::unit_real(vec![0.4, 0.7, 0.1, 0.9]).unwrap();
    let a = simulate_ssm(&p, &q, &x0, 1.0, 1e-3, &[0.5], Seed::new(9)).unwrap();
    let b = simulate_ssm(&p, &q, &x0, 1.0, 1e-3, &[0.5], Seed::new(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stepping_stone_paths_stay_in_the_unit_interval() {
    let sets = [
        (SsmParams::new(1.0, 1.0, 0.0).unwrap(), Kernel::pair(), vec![0.4, 0.7]),
        (SsmParams::new(1.0, 2.0, 0.0).unwrap(), Kernel::single(), vec![0.5]),
    ];
    for (p, q, x0) in sets {
        let (mut steps, mut clamps) = (0u64, 0u64);
        for k in 0..200 {
            let times: Vec<f64> = (1..=50).map(|i| i as f64 * 0.01).collect();
            let tr = simulate_ssm(&p, &q, &Config::unit_real(x0.clone()).unwrap(), 0.5, 1e-3, &times, Seed::new(k)).unwrap();
            for s in &tr.states {
                assert!(s.real().unwrap().iter().all(|v| (0.0..=1.0).contains(v)));
            }
            steps += tr.steps * x0.len() as u64;
            clamps += tr.clamp_events;
        }
        let fraction = clamps as f64 / steps as f64;
        assert!(fraction < 0.01, "clamp fraction {fraction}");
    }
}

#[test]
fn super_random_walk_paths_stay_nonnegative() {
    let p = SrwParams::new(1.0, 0.0, 1.0, NoiseConvention::SqrtTwoAlpha).unwrap();
    let z0 = Config::nonneg_real(vec![0.2, 1.5]).unwrap();
    let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    let tr = simulate_srw(&p, &Kernel::pair(), &z0, 1.0, 1e-3, &times, Seed::new(2)).unwrap();
    assert!(tr.states.iter().all(|s| s.is_valid()));
    assert!(tr.clamp_fraction() < 1.0);
    assert!(tr.model.contains("SQRT_TWO_ALPHA"), "{}", tr.model);
}

/// Without logistic damping and with symmetric migration, the expected
/// total mass grows like `exp(beta t)`.
#[test]
fn super_random_walk_total_mass_mean() {
    // the constructor insists on gamma > 0; the stepper does not need it
    let p = SrwParams { alpha: 1.0, beta: 0.5, gamma: 0.0, noise: NoiseConvention::SqrtAlpha };
    let stepper = SrwStepper::new(p, &Kernel::pair());
    let n = 20_000;
    let seed = Seed::new(17);
    let mut buf = Vec::new();
    let totals: Vec<f64> = (0..n)
        .map(|k| {
            let mut z = vec![4.0, 6.0];
            let mut t = 0.0;
            stepper.advance(&mut z, &mut t, 1.0, 1e-3, &mut seed.child(k).rng(), &mut buf);
            z.iter().sum()
        })
        .collect();
    let (mean, se) = mean_se(&totals);
    let expected = 10.0 * 0.5f64.exp();
    assert!((mean - expected).abs() < 4.0 * se, "{mean} +- {se} vs {expected}");
}

#[test]
fn estimators_agree_exactly_at_time_zero() {
    let q = Kernel::ring(4);
    let x0 = Config::spin(vec![1, 0, 1, 0]).unwrap();
    let y0 = Config::spin(vec![0, 1, 1, 0]).unwrap();
    let e = estimate_duality_functional(&model("cvp:1,3,2"), &model("rw:1,5/2,3/2,1/2"), &q, &x0, &y0, -1.0, 0.0, 500, Seed::new(1))
        .unwrap();
    assert_eq!(e.pair.lhs_mean, e.pair.rhs_mean);
    assert_eq!((e.pair.lhs_stderr, e.pair.rhs_stderr), (0.0, 0.0));
    let p = SsmParams::new(1.0, 1.0, 0.0).unwrap();
    let s = estimate_ssm_bps_functional(&p, 0.0, &Kernel::pair(), &[0.4, 0.7], &[2, 1], 0.0, 1e-3, 500, Seed::new(1)).unwrap();
    assert_eq!(s.lhs_mean, s.rhs_mean);
    assert_eq!((s.lhs_stderr, s.rhs_stderr), (0.0, 0.0));
}

/// Euler paths at `dt` and `dt / 2` driven by the same Brownian increments:
/// each coarse increment is the sum of two fine ones.
fn coupled_ends<S: Stepper>(stepper: &S, x0: &[f64], t: f64, dt: f64, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let n = x0.len();
    let (mut coarse, mut fine) = (x0.to_vec(), x0.to_vec());
    let steps = (t / dt).round() as usize;
    let h = dt / 2.0;
    let euler = |x: &mut Vec<f64>, dw: &[f64], step: f64| {
        let moves: Vec<f64> = (0..n)
            .map(|i| {
                let (drift, var) = stepper.coefficients(x, i);
                drift * step + var.max(0.0).sqrt() * dw[i]
            })
            .collect();
        for (v, m) in x.iter_mut().zip(moves) {
            *v += m;
            stepper.clamp(v);
        }
    };
    for _ in 0..steps {
        let a: Vec<f64> = (0..n).map(|_| h.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..n).map(|_| h.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        euler(&mut fine, &a, h);
        euler(&mut fine, &b, h);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
        euler(&mut coarse, &sum, dt);
    }
    (coarse, fine)
}

fn refinement_shift<S: Stepper>(stepper: &S, x0: &[f64], f: impl Fn(&[f64]) -> f64, n: usize, seed: Seed) -> (f64, f64) {
    let (mut coarse, mut fine) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let (c, f_end) = coupled_ends(stepper, x0, 0.5, 2.5e-4, &mut seed.child(k as u64).rng());
        coarse.push(f(&c));
        fine.push(f(&f_end));
    }
    let (mc, sc) = mean_se(&coarse);
    let (mf, sf) = mean_se(&fine);
    ((mc - mf).abs(), sc.hypot(sf))
}

#[test]
fn halving_the_time_step_moves_functionals_less_than_their_noise() {
    let n = 20_000;
    let ssm = SsmStepper::new(SsmParams::new(1.0, 1.0, 0.0).unwrap(), &Kernel::pair());
    let (shift, noise) = refinement_shift(&ssm, &[0.4, 0.7], |x| psi_ssm_bps(x, &[2, 1], 1.0), n, Seed::new(21));
    assert!(shift < noise, "stepping stone: shift {shift} vs stderr {noise}");
    let srw = SrwStepper::new(SrwParams::new(1.0, 0.0, 1.0, NoiseConvention::SqrtTwoAlpha).unwrap(), &Kernel::pair());
    let (shift, noise) =
        refinement_shift(&srw, &[0.5, 1.0], |z| (-(z[0] * 1.0 + z[1] * 2.0)).exp(), n, Seed::new(22));
    assert!(shift < noise, "super random walk: shift {shift} vs stderr {noise}");
}

#[test]
fn noiseless_stepping_stone_decays_exponentially() {
    let p = SsmParams::new(0.0, 0.0, 1.0).unwrap();
    let tr = simulate_ssm(&p, &Kernel::single(), &Config::unit_real(vec![0.8]).unwrap(), 1.0, 1e-3, &[], Seed::new(1)).unwrap();
    let end = tr.states.last().unwrap().real().unwrap()[0];
    assert!((end - 0.8 * (-1.0f64).exp()).abs() < 1e-3, "{end}");
}

#[test]
fn boundary_states_are_fixed_without_selection_or_mutation() {
    let p = SsmParams::new(1.0, 0.0, 0.0).unwrap();
    for v in [0.0, 1.0] {
        let x0 = Config::unit_real(vec![v, v]).unwrap();
        let tr = simulate_ssm(&p, &Kernel::pair(), &x0, 1.0, 1e-3, &[0.5], Seed::new(3)).unwrap();
        assert!(tr.states.iter().all(|s| s.real().unwrap() == [v, v]));
        assert_eq!(tr.clamp_events, 0);
    }
}

/// `X_t - x0 - s int X(1-X)` is a martingale increment for the single-site
/// stepping stone model without mutation.
#[test]
fn stepping_stone_mean_follows_its_moment_equation() {
    let p = SsmParams::new(1.0, 1.0, 0.0).unwrap();
    let stepper = SsmStepper::new(p, &Kernel::single());
    let (dt, t, x0): (f64, f64, f64) = (1e-3, 0.5, 0.3);
    let seed = Seed::new(31);
    let mut buf = Vec::new();
    let residuals: Vec<f64> = (0..100_000u64)
        .map(|k| {
            let mut rng = seed.child(k).rng();
            let mut x = vec![x0];
            let mut integral = 0.0;
            for _ in 0..(t / dt).round() as usize {
                let before = x[0];
                stepper.step(&mut x, dt, &mut rng, &mut buf);
                integral += 0.5 * dt * (before * (1.0 - before) + x[0] * (1.0 - x[0]));
            }
            x[0] - x0 - p.s * integral
        })
        .collect();
    let (mean, se) = mean_se(&residuals);
    assert!(mean.abs() < 3.0 * se, "{mean} +- {se}");
}

#[test]
fn linear_super_random_walk_mean_decays() {
    let p = SrwParams { alpha: 1.0, beta: -0.5, gamma: 0.0, noise: NoiseConvention::SqrtAlpha };
    let stepper = SrwStepper::new(p, &Kernel::single());
    let seed = Seed::new(32);
    let mut buf = Vec::new();
    let ends: Vec<f64> = (0..100_000u64)
        .map(|k| {
            let mut z = vec![2.0];
            let mut t = 0.0;
            stepper.advance(&mut z, &mut t, 1.0, 1e-3, &mut seed.child(k).rng(), &mut buf);
            z[0]
        })
        .collect();
    let (mean, se) = mean_se(&ends);
    let expected = 2.0 * (-0.5f64).exp();
    assert!((mean - expected).abs() < 3.0 * se, "{mean} +- {se} vs {expected}");
}

#[test]
fn logistic_killing_bounds_the_long_run_mean() {
    let p = SrwParams::new(1.0, 1.0, 1.0, NoiseConvention::SqrtAlpha).unwrap();
    let stepper = SrwStepper::new(p, &Kernel::single());
    let seed = Seed::new(33);
    let mut buf = Vec::new();
    let ends: Vec<f64> = (0..5_000u64)
        .map(|k| {
            let mut z = vec![3.0];
            let mut t = 0.0;
            stepper.advance(&mut z, &mut t, 10.0, 1e-3, &mut seed.child(k).rng(), &mut buf);
            z[0]
        })
        .collect();
    let (mean, se) = mean_se(&ends);
    assert!(mean <= p.beta / p.gamma + 3.0 * se, "{mean} +- {se}");
}
