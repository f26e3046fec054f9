//! Colony-count chains for the mean-field experiments.
//!
//! On a colony lattice whose initial law is exchangeable within colonies,
//! the number of occupied members per colony is itself Markov. Simulating
//! the counts costs O(degree) per event instead of O(N).

use crate::error::{Error, Result};
use crate::model::config::Variant;
use crate::model::jumps::{Jump, LocalGenerator};
use crate::model::kernel::Kernel;
use crate::model::rates::{CvpParams, RwParams};

struct Colonies {
    q: Kernel<f64>,
    size: u32,
    within: f64,
    cross: f64,
    deps: Vec<Vec<usize>>,
}

impl Colonies {
    fn new(q: &Kernel<f64>, size: u32, nu: f64) -> Result<Self> {
        if !q.is_symmetric() {
            return Err(Error::Kernel("colony chains need a symmetric base kernel".into()));
        }
        if size < 2 {
            return Err(Error::Param(format!("colony size {size} must be >= 2")));
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::Param(format!("nu = {nu} must lie in [0,1]")));
        }
        let deps = (0..q.n_sites())
            .map(|k| {
                let mut d: Vec<usize> = std::iter::once(k).chain(q.neighbors(k).iter().map(|(j, _)| *j)).collect();
                d.sort_unstable();
                d.dedup();
                d
            })
            .collect();
        Ok(Colonies { q: q.clone(), size, within: (1.0 - nu) / (size - 1) as f64, cross: nu / size as f64, deps })
    }
}

fn push(out: &mut Vec<Jump<f64>>, first: (usize, i32), second: Option<(usize, i32)>, rate: f64) {
    if rate > 0.0 {
        out.push(Jump { first, second, rate });
    }
}

/// Occupied-member counts of a contact-voter process on a colony lattice.
pub struct LumpedCvp {
    p: CvpParams<f64>,
    c: Colonies,
}

impl LumpedCvp {
    pub fn new(p: CvpParams<f64>, q: &Kernel<f64>, size: u32, nu: f64) -> Result<Self> {
        Ok(LumpedCvp { p, c: Colonies::new(q, size, nu)? })
    }

    pub fn colony_size(&self) -> u32 {
        self.c.size
    }
}

impl LocalGenerator<f64> for LumpedCvp {
    fn n_sites(&self) -> usize {
        self.c.q.n_sites()
    }

    fn variant(&self) -> Variant {
        Variant::Count
    }

    /// Colony `i` owns the births and deaths of its members.
    fn site_jumps(&self, k: &[u32], i: usize, out: &mut Vec<Jump<f64>>) {
        let n = self.c.size as f64;
        let ki = k[i] as f64;
        let empty = n - ki;
        // occupied and empty neighbours seen by a member, weighted by q
        let mut occ = self.c.within * ki;
        let mut free = self.c.within * empty;
        for (j, w) in self.c.q.neighbors(i) {
            occ += self.c.cross * w * k[*j] as f64;
            free += self.c.cross * w * (n - k[*j] as f64);
        }
        push(out, (i, 1), None, (self.p.r + self.p.s) * empty * occ);
        push(out, (i, -1), None, self.p.r * ki * free + self.p.m * ki);
    }

    fn dependents(&self, k: usize) -> &[usize] {
        &self.c.deps[k]
    }
}

/// Occupied-member counts of the random-walk system on a colony lattice.
pub struct LumpedRw {
    p: RwParams<f64>,
    c: Colonies,
}

impl LumpedRw {
    pub fn new(p: RwParams<f64>, q: &Kernel<f64>, size: u32, nu: f64) -> Result<Self> {
        Ok(LumpedRw { p, c: Colonies::new(q, size, nu)? })
    }

    pub fn colony_size(&self) -> u32 {
        self.c.size
    }
}

impl LocalGenerator<f64> for LumpedRw {
    fn n_sites(&self) -> usize {
        self.c.q.n_sites()
    }

    fn variant(&self) -> Variant {
        Variant::Count
    }

    /// Colony `a` owns the transitions triggered by its walkers.
    fn site_jumps(&self, y: &[u32], a: usize, out: &mut Vec<Jump<f64>>) {
        let ya = y[a] as f64;
        if y[a] == 0 {
            return;
        }
        let RwParams { eps, rho, beta, delta } = self.p;
        let n = self.c.size as f64;
        let w = self.c.within;
        // within the colony: moves leave the count unchanged
        push(out, (a, 1), None, beta * w * ya * (n - ya));
        let pairs = w * ya * (ya - 1.0);
        push(out, (a, -2), None, eps * rho * pairs);
        push(out, (a, -1), None, ((1.0 - eps) * rho + beta * eps) * pairs);
        for (b, qw) in self.c.q.neighbors(a) {
            let b = *b;
            let yb = y[b] as f64;
            let to_free = self.c.cross * qw * ya * (n - yb);
            let to_occ = self.c.cross * qw * ya * yb;
            push(out, (a, -1), Some((b, 1)), rho * to_free);
            push(out, (b, 1), None, beta * to_free);
            push(out, (a, -1), Some((b, -1)), eps * rho * to_occ);
            push(out, (a, -1), None, (1.0 - eps) * rho * to_occ);
            push(out, (b, -1), None, beta * eps * to_occ);
        }
        push(out, (a, -1), None, delta * ya);
    }

    fn dependents(&self, k: usize) -> &[usize] {
        &self.c.deps[k]
    }
}
