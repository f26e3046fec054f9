//! Jump-rate semantics of the particle-system generators.
//!
//! Each model enumerates the transitions "owned" by a site: every pair term
//! `(i, j)` of a generator is owned by `i`, every single-site term by its site.
//! The exact engine sums these into generator matrices; the Gillespie engine
//! uses them directly as a per-site rate index.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::config::{Config, Variant};
use crate::model::kernel::Kernel;
use crate::model::rates::{BpsParams, CvpParams, GeneralLsmRates, LsmRates, RwParams};
use crate::scalar::Scalar;

/// A transition changing at most two sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump<T> {
    pub first: (usize, i32),
    pub second: Option<(usize, i32)>,
    pub rate: T,
}

impl<T> Jump<T> {
    fn one(site: usize, delta: i32, rate: T) -> Self {
        Jump { first: (site, delta), second: None, rate }
    }

    fn two(a: (usize, i32), b: (usize, i32), rate: T) -> Self {
        Jump { first: a, second: Some(b), rate }
    }

    pub fn apply(&self, x: &mut [u32]) {
        let (i, di) = self.first;
        x[i] = (x[i] as i64 + di as i64) as u32;
        if let Some((j, dj)) = self.second {
            x[j] = (x[j] as i64 + dj as i64) as u32;
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.first.0).chain(self.second.map(|(j, _)| j))
    }
}

/// A particle system described by its site-local transitions.
pub trait LocalGenerator<T: Scalar>: Send + Sync {
    fn n_sites(&self) -> usize;

    /// Spin systems live in `{0,1}^n`, particle systems in `N^n`.
    fn variant(&self) -> Variant;

    /// Appends the transitions owned by site `i` in state `x`. Entries with
    /// zero rate are omitted; the same target may appear more than once.
    fn site_jumps(&self, x: &[u32], i: usize, out: &mut Vec<Jump<T>>);

    /// Sites whose owned transitions read the value at site `k` (including `k`).
    fn dependents(&self, k: usize) -> &[usize];

    /// Every transition out of `x`.
    fn all_jumps(&self, x: &[u32], out: &mut Vec<Jump<T>>) {
        for i in 0..self.n_sites() {
            self.site_jumps(x, i, out);
        }
    }
}

fn push_if_nonzero<T: Scalar>(out: &mut Vec<Jump<T>>, jump: Jump<T>) {
    if !jump.rate.is_zero() {
        out.push(jump);
    }
}

fn dependents_from_pairs(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut deps: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    for (i, j) in pairs {
        // owner i reads site j
        deps[j].push(i);
    }
    for d in &mut deps {
        d.sort_unstable();
        d.dedup();
    }
    deps
}

/// Lloyd-Sudbury model with site-pair dependent rates.
#[derive(Debug, Clone)]
pub struct LsmProcess<T> {
    rates: GeneralLsmRates<T>,
    partners: Vec<Vec<usize>>,
    deps: Vec<Vec<usize>>,
}

impl<T: Scalar> LsmProcess<T> {
    /// Negative rates are admitted here (formal generators); simulation
    /// entry points reject them.
    pub fn new(rates: GeneralLsmRates<T>) -> Result<Self> {
        rates.validate(false)?;
        let n = rates.n_sites();
        let pairs = rates.active_pairs();
        let mut partners = vec![Vec::new(); n];
        for &(i, j) in &pairs {
            partners[i].push(j);
        }
        let deps = dependents_from_pairs(n, pairs.into_iter());
        Ok(LsmProcess { rates, partners, deps })
    }

    pub fn constant(rates: &LsmRates<T>, q: &Kernel<T>) -> Result<Self> {
        Self::new(GeneralLsmRates::from_constant(rates, q))
    }

    pub fn rates(&self) -> &GeneralLsmRates<T> {
        &self.rates
    }
}

impl<T: Scalar> LocalGenerator<T> for LsmProcess<T> {
    fn n_sites(&self) -> usize {
        self.rates.n_sites()
    }

    fn variant(&self) -> Variant {
        Variant::Spin
    }

    fn site_jumps(&self, x: &[u32], i: usize, out: &mut Vec<Jump<T>>) {
        if x[i] == 0 {
            return;
        }
        let half = T::from_ratio(1, 2);
        let g = &self.rates;
        for &j in &self.partners[i] {
            if x[j] == 1 {
                push_if_nonzero(out, Jump::two((i, -1), (j, -1), half.clone() * g.a(i, j).clone()));
                push_if_nonzero(out, Jump::one(j, -1, g.c(i, j).clone()));
            } else {
                push_if_nonzero(out, Jump::one(j, 1, g.b(i, j).clone()));
                push_if_nonzero(out, Jump::one(i, -1, g.d(i, j).clone()));
                push_if_nonzero(out, Jump::two((i, -1), (j, 1), g.e(i, j).clone()));
            }
        }
    }

    fn dependents(&self, k: usize) -> &[usize] {
        &self.deps[k]
    }
}

fn kernel_dependents<T: Scalar>(q: &Kernel<T>) -> Vec<Vec<usize>> {
    dependents_from_pairs(q.n_sites(), q.pairs().map(|(i, j, _)| (i, j)))
}

/// Contact-voter process, transcribed from its own generator (not via the
/// Lloyd-Sudbury rates).
#[derive(Debug, Clone)]
pub struct CvpProcess<T> {
    params: CvpParams<T>,
    q: Kernel<T>,
    deps: Vec<Vec<usize>>,
}

impl<T: Scalar> CvpProcess<T> {
    pub fn new(params: CvpParams<T>, q: Kernel<T>) -> Self {
        let deps = kernel_dependents(&q);
        CvpProcess { params, q, deps }
    }
}

impl<T: Scalar> LocalGenerator<T> for CvpProcess<T> {
    fn n_sites(&self) -> usize {
        self.q.n_sites()
    }

    fn variant(&self) -> Variant {
        Variant::Spin
    }

    fn site_jumps(&self, x: &[u32], i: usize, out: &mut Vec<Jump<T>>) {
        let p = &self.params;
        let invade = p.r.clone() + p.s.clone();
        for (j, w) in self.q.neighbors(i) {
            let j = *j;
            match (x[i], x[j]) {
                (1, 0) => push_if_nonzero(out, Jump::one(j, 1, invade.clone() * w.clone())),
                (0, 1) => push_if_nonzero(out, Jump::one(j, -1, p.r.clone() * w.clone())),
                _ => {}
            }
        }
        if x[i] == 1 {
            push_if_nonzero(out, Jump::one(i, -1, p.m.clone()));
        }
    }

    fn dependents(&self, k: usize) -> &[usize] {
        &self.deps[k]
    }
}

/// Random walks with annihilation, branching, coalescence and death.
#[derive(Debug, Clone)]
pub struct RwProcess<T> {
    params: RwParams<T>,
    q: Kernel<T>,
    deps: Vec<Vec<usize>>,
}

impl<T: Scalar> RwProcess<T> {
    pub fn new(params: RwParams<T>, q: Kernel<T>) -> Self {
        let deps = kernel_dependents(&q);
        RwProcess { params, q, deps }
    }
}

impl<T: Scalar> LocalGenerator<T> for RwProcess<T> {
    fn n_sites(&self) -> usize {
        self.q.n_sites()
    }

    fn variant(&self) -> Variant {
        Variant::Spin
    }

    fn site_jumps(&self, y: &[u32], i: usize, out: &mut Vec<Jump<T>>) {
        if y[i] == 0 {
            return;
        }
        let p = &self.params;
        let keep = T::one() - p.eps.clone();
        for (j, w) in self.q.neighbors(i) {
            let j = *j;
            if y[j] == 0 {
                push_if_nonzero(out, Jump::two((i, -1), (j, 1), p.rho.clone() * w.clone()));
                push_if_nonzero(out, Jump::one(j, 1, p.beta.clone() * w.clone()));
            } else {
                let walk = p.rho.clone() * w.clone();
                push_if_nonzero(out, Jump::two((i, -1), (j, -1), p.eps.clone() * walk.clone()));
                push_if_nonzero(out, Jump::one(i, -1, keep.clone() * walk));
                push_if_nonzero(
                    out,
                    Jump::one(j, -1, p.beta.clone() * p.eps.clone() * w.clone()),
                );
            }
        }
        push_if_nonzero(out, Jump::one(i, -1, p.delta.clone()));
    }

    fn dependents(&self, k: usize) -> &[usize] {
        &self.deps[k]
    }
}

/// Branching particle system with migration along `q`.
#[derive(Debug, Clone)]
pub struct BpsProcess<T> {
    params: BpsParams<T>,
    q: Kernel<T>,
    deps: Vec<Vec<usize>>,
}

impl<T: Scalar> BpsProcess<T> {
    pub fn new(params: BpsParams<T>, q: Kernel<T>) -> Self {
        let deps = (0..q.n_sites()).map(|k| vec![k]).collect();
        BpsProcess { params, q, deps }
    }

    pub fn params(&self) -> &BpsParams<T> {
        &self.params
    }
}

impl<T: Scalar> LocalGenerator<T> for BpsProcess<T> {
    fn n_sites(&self) -> usize {
        self.q.n_sites()
    }

    fn variant(&self) -> Variant {
        Variant::Count
    }

    fn site_jumps(&self, y: &[u32], i: usize, out: &mut Vec<Jump<T>>) {
        let n = y[i];
        if n == 0 {
            return;
        }
        let p = &self.params;
        let yi = T::from_int(n as i64);
        let pairs = T::from_int(n as i64 * (n as i64 - 1));
        for (j, w) in self.q.neighbors(i) {
            push_if_nonzero(out, Jump::two((i, -1), (*j, 1), w.clone() * yi.clone()));
        }
        if n >= 2 {
            push_if_nonzero(out, Jump::one(i, -2, p.a.clone() * pairs.clone()));
        }
        push_if_nonzero(out, Jump::one(i, 1, p.b.clone() * yi.clone()));
        push_if_nonzero(out, Jump::one(i, -1, p.c.clone() * pairs));
        push_if_nonzero(out, Jump::one(i, -1, p.d.clone() * yi));
    }

    fn dependents(&self, k: usize) -> &[usize] {
        &self.deps[k]
    }
}

/// Sums all transitions out of `x` by target state. Targets are returned in
/// lexicographic order; targets whose rates cancel to zero are dropped.
pub fn aggregate<T: Scalar, G: LocalGenerator<T> + ?Sized>(g: &G, x: &[u32]) -> Vec<(Vec<u32>, T)> {
    let mut buf = Vec::new();
    g.all_jumps(x, &mut buf);
    let mut merged: BTreeMap<Vec<u32>, T> = BTreeMap::new();
    for jump in buf {
        let mut target = x.to_vec();
        jump.apply(&mut target);
        let slot = merged.entry(target).or_insert_with(T::zero);
        *slot = slot.clone() + jump.rate;
    }
    merged.into_iter().filter(|(_, r)| !r.is_zero()).collect()
}

fn check_config(x: &Config, variant: Variant, n: usize) -> Result<&[u32]> {
    if x.variant() != variant {
        return Err(Error::Variant(format!("expected {variant:?}, got {:?}", x.variant())));
    }
    if x.len() != n {
        return Err(Error::SiteMismatch { expected: n, got: x.len() });
    }
    if !x.is_valid() {
        return Err(Error::Variant(format!("{x:?} violates its variant range")));
    }
    Ok(x.discrete().expect("discrete variant"))
}

fn wrap<T: Scalar>(x: &Config, jumps: Vec<(Vec<u32>, T)>) -> Vec<(Config, T)> {
    jumps.into_iter().map(|(v, r)| (x.with_discrete(v), r)).collect()
}

/// Transitions of the general Lloyd-Sudbury generator out of spin state `x`.
pub fn lsm_jumps<T: Scalar>(x: &Config, rates: &GeneralLsmRates<T>) -> Result<Vec<(Config, T)>> {
    let v = check_config(x, Variant::Spin, rates.n_sites())?;
    let g = LsmProcess::new(rates.clone())?;
    Ok(wrap(x, aggregate(&g, v)))
}

pub fn cvp_jumps<T: Scalar>(x: &Config, p: &CvpParams<T>, q: &Kernel<T>) -> Result<Vec<(Config, T)>> {
    let v = check_config(x, Variant::Spin, q.n_sites())?;
    Ok(wrap(x, aggregate(&CvpProcess::new(p.clone(), q.clone()), v)))
}

pub fn rw_jumps<T: Scalar>(y: &Config, p: &RwParams<T>, q: &Kernel<T>) -> Result<Vec<(Config, T)>> {
    let v = check_config(y, Variant::Spin, q.n_sites())?;
    Ok(wrap(y, aggregate(&RwProcess::new(p.clone(), q.clone()), v)))
}

pub fn bps_jumps<T: Scalar>(y: &Config, p: &BpsParams<T>, q: &Kernel<T>) -> Result<Vec<(Config, T)>> {
    let v = check_config(y, Variant::Count, q.n_sites())?;
    Ok(wrap(y, aggregate(&BpsProcess::new(p.clone(), q.clone()), v)))
}
