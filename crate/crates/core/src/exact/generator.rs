use crate::error::{Error, Result};
use crate::exact::space::StateSpace;
use crate::model::jumps::{aggregate, LocalGenerator};
use crate::model::kernel::Kernel;
use crate::model::spec::ModelSpec;
use crate::scalar::Scalar;

/// Sparse Q-matrix over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix<T = f64> {
    space: StateSpace,
    /// Off-diagonal entries per row, sorted by column.
    rows: Vec<Vec<(usize, T)>>,
    diag: Vec<T>,
}

/// Generator of `model` with kernel `q` on `space`.
///
/// On count spaces, transitions leaving the space are dropped and the
/// diagonal balances what remains; rows near the cap are therefore not
/// faithful and gap computations skip them.
pub fn build_generator<T: Scalar>(
    model: &ModelSpec,
    q: &Kernel<T>,
    space: StateSpace,
    process: bool,
) -> Result<GeneratorMatrix<T>> {
    let g = model.local_generator(q, process)?;
    GeneratorMatrix::from_local(g.as_ref(), space)
}

impl<T: Scalar> GeneratorMatrix<T> {
    pub fn from_local<G: LocalGenerator<T> + ?Sized>(g: &G, space: StateSpace) -> Result<Self> {
        if g.variant() != space.variant() {
            return Err(Error::Variant(format!(
                "model state space {:?} does not match {:?}",
                g.variant(),
                space.variant()
            )));
        }
        if g.n_sites() != space.n_sites() {
            return Err(Error::SiteMismatch { expected: space.n_sites(), got: g.n_sites() });
        }
        let n = space.size();
        let mut rows = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for k in 0..n {
            let x = space.config(k);
            let mut row: Vec<(usize, T)> =
                aggregate(g, &x).into_iter().filter_map(|(y, r)| space.index(&y).map(|j| (j, r))).collect();
            row.sort_by_key(|e| e.0);
            let total = row.iter().fold(T::zero(), |acc, (_, r)| acc + r.clone());
            diag.push(-total);
            rows.push(row);
        }
        Ok(GeneratorMatrix { space, rows, diag })
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn off_diagonal(&self, row: usize) -> &[(usize, T)] {
        &self.rows[row]
    }

    pub fn diagonal(&self, row: usize) -> &T {
        &self.diag[row]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i == j {
            return self.diag[i].clone();
        }
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(p) => self.rows[i][p].1.clone(),
            Err(_) => T::zero(),
        }
    }

    /// Row `i` including the diagonal, sorted by column.
    pub fn row(&self, i: usize) -> Vec<(usize, T)> {
        let mut r = self.rows[i].clone();
        let p = r.partition_point(|e| e.0 < i);
        r.insert(p, (i, self.diag[i].clone()));
        r
    }

    pub fn dense(&self) -> Vec<Vec<T>> {
        (0..self.size()).map(|i| (0..self.size()).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Largest absolute row sum (zero up to rounding for a valid Q-matrix).
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.size())
            .map(|i| {
                let s = self.rows[i].iter().fold(self.diag[i].clone(), |acc, (_, r)| acc + r.clone());
                s.as_f64().abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn has_zero_row_sums(&self) -> bool {
        if T::EXACT {
            (0..self.size())
                .all(|i| self.rows[i].iter().fold(self.diag[i].clone(), |acc, (_, r)| acc + r.clone()).is_zero())
        } else {
            self.max_row_sum_error() <= 1e-12
        }
    }

    pub fn has_nonnegative_off_diagonal(&self) -> bool {
        self.rows.iter().flatten().all(|(_, r)| !r.lt_zero())
    }

    /// Exit rate bound used by uniformization.
    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().map(|d| d.as_f64().abs()).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> GeneratorMatrix<f64> {
        GeneratorMatrix {
            space: self.space,
            rows: self.rows.iter().map(|r| r.iter().map(|(j, v)| (*j, v.as_f64())).collect()).collect(),
            diag: self.diag.iter().map(|d| d.as_f64()).collect(),
        }
    }
}
