//! Event-driven simulation of the jump processes.

use rand::Rng as _;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::config::Config;
use crate::model::jumps::{Jump, LocalGenerator};
use crate::model::kernel::Kernel;
use crate::model::spec::ModelSpec;
use crate::rng::{Rng, Seed};

/// Binary tree of nonnegative weights supporting O(log n) updates and
/// proportional sampling. Parents are recomputed from their children on
/// every update, so no rounding drift accumulates.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(n: usize) -> Self {
        let leaves = n.max(1).next_power_of_two();
        SumTree { leaves, nodes: vec![0.0; 2 * leaves] }
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let mut k = self.leaves + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    /// Leaf whose cumulative weight interval contains `u` (`0 <= u < total`).
    pub fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if u < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }
}

/// Reusable simulation state for one generator: the per-site transition
/// lists and their rate totals.
pub struct JumpSimulator<'g> {
    gen: &'g dyn LocalGenerator<f64>,
    tree: SumTree,
    jumps: Vec<Vec<Jump<f64>>>,
    stamp: Vec<u64>,
    epoch: u64,
}

impl<'g> JumpSimulator<'g> {
    pub fn new(gen: &'g dyn LocalGenerator<f64>) -> Self {
        let n = gen.n_sites();
        JumpSimulator { gen, tree: SumTree::new(n), jumps: vec![Vec::new(); n], stamp: vec![0; n], epoch: 0 }
    }

    fn refresh(&mut self, x: &[u32], i: usize) {
        let list = &mut self.jumps[i];
        list.clear();
        self.gen.site_jumps(x, i, list);
        let total: f64 = list.iter().map(|j| j.rate).sum();
        self.tree.set(i, total);
    }

    /// Rebuilds every site's rates for state `x`.
    pub fn reset(&mut self, x: &[u32]) {
        for i in 0..self.gen.n_sites() {
            self.refresh(x, i);
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Runs from `*t` to `t_end`, leaving the state at `t_end` in `x`.
    /// [`reset`](Self::reset) must have been called for the current `x`.
    /// Returns the number of events.
    pub fn advance(&mut self, x: &mut [u32], t: &mut f64, t_end: f64, rng: &mut Rng) -> u64 {
        let mut events = 0;
        loop {
            let total = self.tree.total();
            if total <= 0.0 {
                break;
            }
            let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
            if *t + wait > t_end {
                break;
            }
            *t += wait;
            let site = self.tree.find(rng.random::<f64>() * total);
            let site_total = self.tree.get(site);
            let mut u = rng.random::<f64>() * site_total;
            let list = &self.jumps[site];
            let mut pick = list.len() - 1;
            for (k, j) in list.iter().enumerate() {
                if u < j.rate {
                    pick = k;
                    break;
                }
                u -= j.rate;
            }
            let jump = list[pick].clone();
            jump.apply(x);
            events += 1;
            self.epoch += 1;
            let gen = self.gen;
            for s in jump.sites() {
                for &d in gen.dependents(s) {
                    if self.stamp[d] != self.epoch {
                        self.stamp[d] = self.epoch;
                        self.refresh(x, d);
                    }
                }
            }
        }
        *t = t_end;
        events
    }

    /// State at time `t` started from `x0`.
    pub fn sample_at(&mut self, x0: &[u32], t: f64, rng: &mut Rng) -> Vec<u32> {
        let mut x = x0.to_vec();
        self.reset(&x);
        let mut now = 0.0;
        self.advance(&mut x, &mut now, t, rng);
        x
    }
}

/// Sampled path of a jump process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Config>,
    pub model: String,
    pub seed: Seed,
    pub events: u64,
}

pub(crate) fn check_times(t_end: f64, sample_times: &[f64]) -> Result<Vec<f64>> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Param(format!("end time {t_end} must be finite and >= 0")));
    }
    let mut times = vec![0.0];
    for &s in sample_times {
        if !(0.0..=t_end).contains(&s) {
            return Err(Error::Param(format!("sample time {s} outside [0, {t_end}]")));
        }
        if s < *times.last().unwrap() {
            return Err(Error::Param("sample times must be increasing".into()));
        }
        if s > *times.last().unwrap() {
            times.push(s);
        }
    }
    if t_end > *times.last().unwrap() {
        times.push(t_end);
    }
    Ok(times)
}

/// Exact continuous-time simulation of a jump model, recorded at time 0,
/// at each sample time, and at `t_end`.
pub fn simulate_jump_process(
    model: &ModelSpec,
    q: &Kernel<f64>,
    x0: &Config,
    t_end: f64,
    sample_times: &[f64],
    seed: Seed,
) -> Result<Trajectory> {
    let gen = model.local_generator::<f64>(q, true)?;
    let x = x0
        .discrete()
        .filter(|_| x0.variant() == gen.variant() && x0.is_valid())
        .ok_or_else(|| Error::Variant(format!("{} needs a valid {:?} configuration", model.family(), gen.variant())))?;
    if x.len() != gen.n_sites() {
        return Err(Error::SiteMismatch { expected: gen.n_sites(), got: x.len() });
    }
    let times = check_times(t_end, sample_times)?;
    let mut rng = seed.rng();
    let mut sim = JumpSimulator::new(gen.as_ref());
    let mut state = x.to_vec();
    sim.reset(&state);
    let mut now = 0.0;
    let mut events = 0;
    let mut states = Vec::with_capacity(times.len());
    for &s in &times {
        events += sim.advance(&mut state, &mut now, s, &mut rng);
        states.push(x0.with_discrete(state.clone()));
    }
    Ok(Trajectory { times, states, model: model.family().to_string(), seed, events })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_tree_sampling() {
        let mut t = SumTree::new(5);
        for (i, w) in [1.0, 0.0, 2.0, 0.5, 0.0].into_iter().enumerate() {
            t.set(i, w);
        }
        assert_eq!(t.total(), 3.5);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 2);
        assert_eq!(t.find(2.99), 2);
        assert_eq!(t.find(3.2), 3);
        // rounding past the end never lands on an empty leaf
        assert_eq!(t.find(3.5), 3);
        t.set(2, 0.0);
        assert_eq!(t.total(), 1.5);
    }

    #[test]
    fn zero_state_is_a_trap() {
        let m = ModelSpec::cvp(1.0, 1.0, 1.0);
        let x0 = Config::spin(vec![0, 0, 0]).unwrap();
        let tr = simulate_jump_process(&m, &Kernel::ring(3), &x0, 5.0, &[1.0, 2.0], Seed::new(1)).unwrap();
        assert_eq!(tr.times, vec![0.0, 1.0, 2.0, 5.0]);
        assert!(tr.states.iter().all(|s| *s == x0));
        assert_eq!(tr.events, 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = ModelSpec::rw(0.5, 1.0, 1.0, 0.2);
        let x0 = Config::spin(vec![1, 0, 1, 1]).unwrap();
        let a = simulate_jump_process(&m, &Kernel::ring(4), &x0, 3.0, &[1.0], Seed::new(9)).unwrap();
        let b = simulate_jump_process(&m, &Kernel::ring(4), &x0, 3.0, &[1.0], Seed::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = ModelSpec::cvp(1.0, 1.0, 1.0);
        let k = Kernel::pair();
        let count = Config::count(vec![1, 0]);
        assert!(simulate_jump_process(&m, &k, &count, 1.0, &[], Seed::new(0)).is_err());
        let x = Config::spin(vec![1, 0]).unwrap();
        assert!(simulate_jump_process(&m, &k, &x, 1.0, &[2.0], Seed::new(0)).is_err());
        let formal = ModelSpec::from_shorthand("lsm:0,1,-1,1,0").unwrap();
        assert!(simulate_jump_process(&formal, &k, &x, 1.0, &[], Seed::new(0)).is_err());
    }
}
