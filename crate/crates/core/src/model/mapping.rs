//! Rate maps from the named families into Lloyd-Sudbury rates.

use crate::model::rates::{CvpParams, LsmRates, RwParams};
use crate::scalar::Scalar;

/// `(0, r+s, m, r+m, 0)`.
pub fn cvp_as_lsm<T: Scalar>(p: &CvpParams<T>) -> LsmRates<T> {
    LsmRates::formal(
        T::zero(),
        p.r.clone() + p.s.clone(),
        p.m.clone(),
        p.r.clone() + p.m.clone(),
        T::zero(),
    )
}

/// `(2 rho eps, beta, rho (1-eps) + beta eps + delta, delta, rho)`.
///
/// The exclusion entry `e = rho` carries the jumps of single walkers onto
/// empty sites.
pub fn rw_as_lsm<T: Scalar>(p: &RwParams<T>) -> LsmRates<T> {
    let two = T::from_int(2);
    LsmRates::formal(
        two * p.rho.clone() * p.eps.clone(),
        p.beta.clone(),
        p.rho.clone() * (T::one() - p.eps.clone()) + p.beta.clone() * p.eps.clone() + p.delta.clone(),
        p.delta.clone(),
        p.rho.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::jumps::{aggregate, CvpProcess, LsmProcess, RwProcess};
    use crate::model::kernel::Kernel;
    use crate::scalar::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_int(n)
    }

    fn ints(v: [i64; 5]) -> LsmRates<Rational> {
        LsmRates::from_ints(v)
    }

    #[test]
    fn contact_voter_examples() {
        assert_eq!(cvp_as_lsm(&CvpParams::new(r(1), r(1), r(0)).unwrap()), ints([0, 2, 0, 1, 0]));
        assert_eq!(cvp_as_lsm(&CvpParams::new(r(0), r(3), r(5)).unwrap()), ints([0, 3, 5, 5, 0]));
        assert_eq!(cvp_as_lsm(&CvpParams::new(r(1), r(0), r(0)).unwrap()), ints([0, 1, 0, 1, 0]));
    }

    #[test]
    fn random_walk_examples() {
        // annihilating walkers: the coalescence entry is zero
        assert_eq!(rw_as_lsm(&RwParams::new(r(1), r(1), r(0), r(0)).unwrap()), ints([2, 0, 0, 0, 1]));
        let cp = rw_as_lsm(&RwParams::new(r(0), r(0), r(3), r(5)).unwrap());
        assert_eq!(cp, ints([0, 3, 5, 5, 0]));
        assert_eq!(cp, cvp_as_lsm(&CvpParams::new(r(0), r(3), r(5)).unwrap()));
        assert_eq!(rw_as_lsm(&RwParams::new(r(0), r(2), r(3), r(5)).unwrap()), ints([0, 3, 7, 5, 2]));
    }

    /// Jump rates of the family generators against the Lloyd-Sudbury
    /// generator with the mapped rates, state by state.
    #[test]
    fn generators_match_on_small_lattices() {
        let third = Rational::from_ratio(1, 3);
        let rw = RwParams::new(third.clone(), r(2), Rational::from_ratio(3, 2), r(1)).unwrap();
        let cvp = CvpParams::new(r(2), third, r(1)).unwrap();
        for q in [Kernel::pair(), Kernel::ring(3), Kernel::complete(3)] {
            let n = q.n_sites();
            let a = RwProcess::new(rw.clone(), q.clone());
            let b = LsmProcess::constant(&rw_as_lsm(&rw), &q).unwrap();
            let c = CvpProcess::new(cvp.clone(), q.clone());
            let d = LsmProcess::constant(&cvp_as_lsm(&cvp), &q).unwrap();
            for bits in 0..(1u32 << n) {
                let x: Vec<u32> = (0..n).map(|i| (bits >> i) & 1).collect();
                assert_eq!(aggregate(&a, &x), aggregate(&b, &x), "rw at {x:?}");
                assert_eq!(aggregate(&c, &x), aggregate(&d, &x), "cvp at {x:?}");
            }
        }
    }
}
