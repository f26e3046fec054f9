use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::config::Variant;

/// Finite state space enumerated lexicographically, site 0 most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateSpace {
    Spin { n_sites: usize },
    /// Counts `0..=cap` per site.
    Count { n_sites: usize, cap: u32 },
}

impl StateSpace {
    pub fn spin(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > 20 {
            return Err(Error::Dimension(format!("spin space needs 1..=20 sites, got {n_sites}")));
        }
        Ok(StateSpace::Spin { n_sites })
    }

    pub fn count(n_sites: usize, cap: u32) -> Result<Self> {
        if n_sites == 0 || cap == 0 {
            return Err(Error::Dimension("count space needs n_sites >= 1 and cap >= 1".into()));
        }
        let size = (cap as f64 + 1.0).powi(n_sites as i32);
        if size > 1e6 {
            return Err(Error::Dimension(format!("count space with {size} states is too large")));
        }
        Ok(StateSpace::Count { n_sites, cap })
    }

    pub fn n_sites(&self) -> usize {
        match *self {
            StateSpace::Spin { n_sites } | StateSpace::Count { n_sites, .. } => n_sites,
        }
    }

    /// Largest value a site can take.
    pub fn max_value(&self) -> u32 {
        match *self {
            StateSpace::Spin { .. } => 1,
            StateSpace::Count { cap, .. } => cap,
        }
    }

    fn base(&self) -> usize {
        self.max_value() as usize + 1
    }

    pub fn variant(&self) -> Variant {
        match self {
            StateSpace::Spin { .. } => Variant::Spin,
            StateSpace::Count { .. } => Variant::Count,
        }
    }

    pub fn size(&self) -> usize {
        self.base().pow(self.n_sites() as u32)
    }

    pub fn contains(&self, x: &[u32]) -> bool {
        x.len() == self.n_sites() && x.iter().all(|&v| v <= self.max_value())
    }

    pub fn index(&self, x: &[u32]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let b = self.base();
        Some(x.iter().fold(0, |acc, &v| acc * b + v as usize))
    }

    pub fn config(&self, mut idx: usize) -> Vec<u32> {
        let b = self.base();
        let mut x = vec![0; self.n_sites()];
        for slot in x.iter_mut().rev() {
            *slot = (idx % b) as u32;
            idx /= b;
        }
        x
    }

    pub fn configs(&self) -> Vec<Vec<u32>> {
        (0..self.size()).map(|k| self.config(k)).collect()
    }

    /// States with a site at `cap - 1` or above, whose one-step neighbourhood
    /// may leave the space. Spin spaces have no boundary.
    pub fn is_boundary(&self, x: &[u32]) -> bool {
        match *self {
            StateSpace::Spin { .. } => false,
            StateSpace::Count { cap, .. } => x.iter().any(|&v| v + 1 >= cap),
        }
    }
}
