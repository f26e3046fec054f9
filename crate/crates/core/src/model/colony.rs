use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::kernel::Kernel;
use crate::scalar::Scalar;

/// Site `(colony, member)` of a colony lattice, flattened.
pub fn colony_site(colony: usize, member: usize, n_members: usize) -> usize {
    colony * n_members + member
}

/// Kernel on `n_sites * n_members` sites: rate `(nu / N) q(i, j)` between
/// members of distinct colonies and `(1 - nu) / (N - 1)` within a colony.
///
/// Row sums are `nu * (row sum of q) + 1 - nu`, which is one whenever `q`
/// has unit rows. On a single colony the cross term is absent.
pub fn colony_kernel<T: Scalar>(q: &Kernel<T>, n_members: usize, nu: T) -> Result<Kernel<T>> {
    if !q.is_symmetric() {
        return Err(Error::Kernel("colony kernels need a symmetric base kernel".into()));
    }
    if n_members < 2 {
        return Err(Error::Param(format!("colony size {n_members} must be >= 2")));
    }
    if nu.lt_zero() || nu > T::one() {
        return Err(Error::Param(format!("nu = {nu} must lie in [0,1]")));
    }
    let big_n = T::from_int(n_members as i64);
    let within = (T::one() - nu.clone()) / T::from_int(n_members as i64 - 1);
    let cross = nu / big_n;
    let n = q.n_sites() * n_members;
    let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
    for i in 0..q.n_sites() {
        for k in 0..n_members {
            let row = &mut rows[colony_site(i, k, n_members)];
            if !within.is_zero() {
                for l in (0..n_members).filter(|&l| l != k) {
                    row.insert(colony_site(i, l, n_members), within.clone());
                }
            }
            if !cross.is_zero() {
                for (j, w) in q.neighbors(i) {
                    for l in 0..n_members {
                        row.insert(colony_site(*j, l, n_members), cross.clone() * w.clone());
                    }
                }
            }
        }
    }
    Ok(Kernel::from_rows(rows, q.is_raw()))
}
