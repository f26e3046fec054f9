use crate::duality::{dual_rates, dual_rates_general, DualPairReport, GeneralDualReport};
use crate::error::{Error, Result};
use crate::exact::generator::GeneratorMatrix;
use crate::exact::space::StateSpace;
use crate::model::jumps::LsmProcess;
use crate::model::kernel::Kernel;
use crate::model::rates::{GeneralLsmRates, LsmRates};
use crate::scalar::{Rational, Scalar};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T = f64> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix { n_rows, n_cols, data: vec![T::zero(); n_rows * n_cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }
}

/// Size of the mismatch between two sides of a matrix identity.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport<T = f64> {
    pub max_abs_entry: T,
    pub frobenius: f64,
    /// Largest sum of absolute terms behind a single entry, i.e. the size
    /// roundoff is measured against. Left at 0 by the exact integer path.
    pub term_scale: f64,
    /// Configurations `(x, y)` at the largest entry, if any entry is nonzero.
    pub worst: Option<(Vec<u32>, Vec<u32>)>,
    pub exact_zero: bool,
    pub evaluated_rows: usize,
    pub evaluated_cols: usize,
    /// Rows and columns skipped because they touch a count-space cap.
    pub excluded_rows: usize,
    pub excluded_cols: usize,
}

impl<T: Scalar> GapReport<T> {
    pub fn max_abs_f64(&self) -> f64 {
        self.max_abs_entry.as_f64()
    }

    /// Exact zero in exact mode, `max_abs_entry <= tol` otherwise.
    pub fn within(&self, tol: f64) -> bool {
        if T::EXACT {
            self.exact_zero
        } else {
            self.max_abs_f64() <= tol
        }
    }
}

struct GapAccumulator<T> {
    max: T,
    sq: f64,
    scale: f64,
    worst: Option<(usize, usize)>,
    nonzero: bool,
}

impl<T: Scalar> GapAccumulator<T> {
    fn new() -> Self {
        GapAccumulator { max: T::zero(), sq: 0.0, scale: 0.0, worst: None, nonzero: false }
    }

    fn push(&mut self, i: usize, j: usize, v: T) {
        if v.is_zero() {
            return;
        }
        self.nonzero = true;
        let f = v.as_f64();
        self.sq += f * f;
        let a = v.abs();
        if a > self.max || self.worst.is_none() {
            self.max = a;
            self.worst = Some((i, j));
        }
    }

    fn finish(self, xs: &StateSpace, ys: &StateSpace, rows: (usize, usize), cols: (usize, usize)) -> GapReport<T> {
        GapReport {
            max_abs_entry: self.max,
            frobenius: self.sq.sqrt(),
            term_scale: self.scale,
            worst: self.worst.map(|(i, j)| (xs.config(i), ys.config(j))),
            exact_zero: !self.nonzero,
            evaluated_rows: rows.0,
            evaluated_cols: cols.0,
            excluded_rows: rows.1,
            excluded_cols: cols.1,
        }
    }
}

fn dot(x: &[u32], y: &[u32]) -> usize {
    x.iter().zip(y).map(|(&a, &b)| (a * b) as usize).sum()
}

fn powers<T: Scalar>(eta: &T, max: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = T::one();
    for _ in 0..=max {
        out.push(acc.clone());
        acc = acc * eta.clone();
    }
    out
}

/// `Psi[x, y] = prod_i eta^(x(i) y(i))`, with `0^0 = 1`.
pub fn psi_matrix<T: Scalar>(xs: StateSpace, ys: StateSpace, eta: &T) -> Result<DenseMatrix<T>> {
    if xs.n_sites() != ys.n_sites() {
        return Err(Error::Dimension("psi needs spaces over the same sites".into()));
    }
    let (cx, cy) = (xs.configs(), ys.configs());
    let pw = powers(eta, xs.n_sites() * (xs.max_value() * ys.max_value()) as usize);
    let mut m = DenseMatrix::zeros(cx.len(), cy.len());
    for (i, x) in cx.iter().enumerate() {
        for (j, y) in cy.iter().enumerate() {
            m.set(i, j, pw[dot(x, y)].clone());
        }
    }
    Ok(m)
}

fn split_boundary(space: &StateSpace, configs: &[Vec<u32>]) -> (Vec<usize>, usize) {
    let inner: Vec<usize> = (0..configs.len()).filter(|&k| !space.is_boundary(&configs[k])).collect();
    let excluded = configs.len() - inner.len();
    (inner, excluded)
}

/// Entrywise size of `G Psi - Psi G'^T`, i.e. of
/// `G psi(., y)(x) - G' psi(x, .)(y)` over all evaluated `(x, y)`.
pub fn duality_gap<T: Scalar>(g: &GeneratorMatrix<T>, g_dual: &GeneratorMatrix<T>, eta: &T) -> Result<GapReport<T>> {
    let (xs, ys) = (g.space(), g_dual.space());
    if xs.n_sites() != ys.n_sites() {
        return Err(Error::Dimension(format!(
            "generators act on {} and {} sites",
            xs.n_sites(),
            ys.n_sites()
        )));
    }
    let (cx, cy) = (xs.configs(), ys.configs());
    let pw = powers(eta, xs.n_sites() * (xs.max_value() * ys.max_value()) as usize);
    let (rows, ex_rows) = split_boundary(&xs, &cx);
    let (cols, ex_cols) = split_boundary(&ys, &cy);
    let row_x: Vec<Vec<(usize, T)>> = rows.iter().map(|&i| g.row(i)).collect();
    let row_y: Vec<Vec<(usize, T)>> = cols.iter().map(|&j| g_dual.row(j)).collect();
    let mut acc = GapAccumulator::new();
    if T::EXACT {
        if let Some((entries, scale)) = integer_gap(&row_x, &row_y, &rows, &cols, &cx, &cy, eta) {
            for (i, j, v) in entries {
                acc.push(i, j, T::from_rational(&Rational::new(BigInt::from(v), scale.clone())));
            }
            return Ok(acc.finish(&xs, &ys, (rows.len(), ex_rows), (cols.len(), ex_cols)));
        }
    }
    for (ri, &i) in rows.iter().enumerate() {
        for (cj, &j) in cols.iter().enumerate() {
            let mut v = T::zero();
            let mut size = 0.0;
            for (k, rate) in &row_x[ri] {
                let term = rate.clone() * pw[dot(&cx[*k], &cy[j])].clone();
                size += term.as_f64().abs();
                v = v + term;
            }
            for (k, rate) in &row_y[cj] {
                let term = rate.clone() * pw[dot(&cx[i], &cy[*k])].clone();
                size += term.as_f64().abs();
                v = v - term;
            }
            acc.scale = acc.scale.max(size);
            acc.push(i, j, v);
        }
    }
    Ok(acc.finish(&xs, &ys, (rows.len(), ex_rows), (cols.len(), ex_cols)))
}

/// The gap scaled by a common denominator, in checked 128-bit integer
/// arithmetic. `None` if anything does not fit; the caller then falls back
/// to arbitrary precision. Returns the nonzero entries and the scale.
#[allow(clippy::too_many_arguments)]
fn integer_gap<T: Scalar>(
    row_x: &[Vec<(usize, T)>],
    row_y: &[Vec<(usize, T)>],
    rows: &[usize],
    cols: &[usize],
    cx: &[Vec<u32>],
    cy: &[Vec<u32>],
    eta: &T,
) -> Option<(Vec<(usize, usize, i128)>, BigInt)> {
    let eta = eta.to_rational()?;
    let mut den = BigInt::one();
    for (_, r) in row_x.iter().chain(row_y).flatten() {
        den = den.lcm(r.to_rational()?.denom());
    }
    let scaled = |rs: &[Vec<(usize, T)>]| -> Option<Vec<Vec<(usize, i128)>>> {
        rs.iter()
            .map(|row| {
                row.iter()
                    .map(|(k, r)| {
                        let r = r.to_rational()?;
                        (r.numer() * (&den / r.denom())).to_i128().map(|v| (*k, v))
                    })
                    .collect()
            })
            .collect()
    };
    let (gx, gy) = (scaled(row_x)?, scaled(row_y)?);
    let (p, q) = (eta.numer().to_i128()?, eta.denom().to_i128()?);
    let top = cx.first().map_or(0, |x| x.len()) * cx.iter().chain(cy).flatten().max().copied().unwrap_or(0).pow(2) as usize;
    // psi[k] = p^k q^(top - k), the powers of eta times q^top
    let mut psi = Vec::with_capacity(top + 1);
    for k in 0..=top {
        let mut v: i128 = 1;
        for _ in 0..k {
            v = v.checked_mul(p)?;
        }
        for _ in k..top {
            v = v.checked_mul(q)?;
        }
        psi.push(v);
    }
    let mut out = Vec::new();
    for (ri, &i) in rows.iter().enumerate() {
        for (cj, &j) in cols.iter().enumerate() {
            let mut v: i128 = 0;
            for &(k, rate) in &gx[ri] {
                v = v.checked_add(rate.checked_mul(psi[dot(&cx[k], &cy[j])])?)?;
            }
            for &(k, rate) in &gy[cj] {
                v = v.checked_sub(rate.checked_mul(psi[dot(&cx[i], &cy[k])])?)?;
            }
            if v != 0 {
                out.push((i, j, v));
            }
        }
    }
    Some((out, den * num_traits::pow(BigInt::from(q), top)))
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Markov kernel of independent per-particle retention with probability `v`:
/// `T[x, x'] = prod_i C(x(i), x'(i)) v^x'(i) (1-v)^(x(i)-x'(i))` for `x' <= x`.
pub fn thinning_kernel_matrix<T: Scalar>(v: &T, space: StateSpace) -> Result<DenseMatrix<T>> {
    if v.lt_zero() || *v > T::one() {
        return Err(Error::Param(format!("thinning probability {v} outside [0,1]")));
    }
    let configs = space.configs();
    let cap = space.max_value();
    let keep = powers(v, cap as usize);
    let drop = powers(&(T::one() - v.clone()), cap as usize);
    let mut m = DenseMatrix::zeros(configs.len(), configs.len());
    for (i, x) in configs.iter().enumerate() {
        for (j, y) in configs.iter().enumerate() {
            if y.iter().zip(x).any(|(a, b)| a > b) {
                continue;
            }
            let mut p = T::one();
            for (&xi, &yi) in x.iter().zip(y) {
                p = p * T::from_int(binomial(xi, yi)) * keep[yi as usize].clone() * drop[(xi - yi) as usize].clone();
            }
            m.set(i, j, p);
        }
    }
    Ok(m)
}

/// Entrywise size of `G2 T_v - T_v G1`. When it vanishes, thinning the
/// second process by `v` at any time gives the law of the first.
pub fn intertwining_gap<T: Scalar>(g2: &GeneratorMatrix<T>, g1: &GeneratorMatrix<T>, v: &T) -> Result<GapReport<T>> {
    let space = g2.space();
    if g1.space() != space {
        return Err(Error::Dimension("intertwining needs generators on the same space".into()));
    }
    let t = thinning_kernel_matrix(v, space)?;
    let n = space.size();
    let configs = space.configs();
    let (rows, ex_rows) = split_boundary(&space, &configs);
    let (cols, ex_cols) = split_boundary(&space, &configs);
    // Columns of G1 as sparse lists, for the T G1 product.
    let mut g1_cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for k in 0..n {
        for (j, r) in g1.row(k) {
            g1_cols[j].push((k, r));
        }
    }
    let mut acc = GapAccumulator::new();
    for &i in &rows {
        let g2_row = g2.row(i);
        let t_row = t.row(i);
        for &j in &cols {
            let mut val = T::zero();
            for (k, r) in &g2_row {
                let tk = t.get(*k, j);
                if !tk.is_zero() {
                    val = val + r.clone() * tk.clone();
                }
            }
            for (k, r) in &g1_cols[j] {
                let tk = &t_row[*k];
                if !tk.is_zero() {
                    val = val - tk.clone() * r.clone();
                }
            }
            acc.push(i, j, val);
        }
    }
    Ok(acc.finish(&space, &space, (rows.len(), ex_rows), (cols.len(), ex_cols)))
}

/// Dual rates together with the generator-level check.
#[derive(Debug, Clone, PartialEq)]
pub struct DupReport<T = f64> {
    pub dual: DualPairReport<T>,
    pub gap: GapReport<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralDupReport<T = f64> {
    pub dual: GeneralDualReport<T>,
    pub gap: GapReport<T>,
}

/// Computes the dual of constant rates under `eta` and measures the duality
/// gap between the two generators on `space`. Negative dual rates are kept
/// (formal generators).
pub fn verify_dupar<T: Scalar>(
    rates: &LsmRates<T>,
    eta: &T,
    q: &Kernel<T>,
    space: StateSpace,
) -> Result<DupReport<T>> {
    let dual = dual_rates(rates, eta)?;
    let g = GeneratorMatrix::from_local(&LsmProcess::constant(rates, q)?, space)?;
    let g_dual = GeneratorMatrix::from_local(&LsmProcess::constant(&dual.output, q)?, space)?;
    let gap = duality_gap(&g, &g_dual, eta)?;
    Ok(DupReport { dual, gap })
}

/// Site-pair dependent counterpart of [`verify_dupar`].
pub fn verify_dupar_general<T: Scalar>(
    rates: &GeneralLsmRates<T>,
    eta: &T,
    space: StateSpace,
) -> Result<GeneralDupReport<T>> {
    let dual = dual_rates_general(rates, eta)?;
    let g = GeneratorMatrix::from_local(&LsmProcess::new(rates.clone())?, space)?;
    let g_dual = GeneratorMatrix::from_local(&LsmProcess::new(dual.output.clone())?, space)?;
    let gap = duality_gap(&g, &g_dual, eta)?;
    Ok(GeneralDupReport { dual, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::generator::build_generator;
    use crate::model::spec::ModelSpec;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn gen(text: &str, k: &Kernel<Rational>, space: StateSpace) -> GeneratorMatrix<Rational> {
        build_generator(&ModelSpec::from_shorthand(text).unwrap(), k, space, false).unwrap()
    }

    #[test]
    fn psi_boundary_rows_are_ones() {
        let s = StateSpace::spin(3).unwrap();
        let p = psi_matrix(s, s, &q(-1, 2)).unwrap();
        for k in 0..s.size() {
            assert_eq!(*p.get(0, k), q(1, 1));
            assert_eq!(*p.get(k, 0), q(1, 1));
            for l in 0..s.size() {
                assert_eq!(p.get(k, l), p.get(l, k));
            }
        }
        assert_eq!(*p.get(7, 7), q(-1, 8));
        let zero = psi_matrix(s, s, &q(0, 1)).unwrap();
        assert_eq!(*zero.get(0b101, 0b010), q(1, 1));
        assert_eq!(*zero.get(0b101, 0b100), q(0, 1));
    }

    #[test]
    fn voter_and_coalescing_walk() {
        let s = StateSpace::spin(2).unwrap();
        let k = Kernel::pair();
        let gap = duality_gap(&gen("lsm:0,1,0,1,0", &k, s), &gen("lsm:0,0,1,0,1", &k, s), &q(0, 1)).unwrap();
        assert!(gap.exact_zero);
        assert_eq!(gap.evaluated_rows, 4);
        assert_eq!(gap.worst, None);
    }

    #[test]
    fn cvp_self_duality_on_ring() {
        let s = StateSpace::spin(4).unwrap();
        let g = gen("cvp:1,1,1", &Kernel::ring(4), s);
        assert!(duality_gap(&g, &g, &q(1, 2)).unwrap().exact_zero);
        let off = duality_gap(&g, &g, &q(1, 3)).unwrap();
        assert!(!off.exact_zero);
        assert!(off.worst.is_some());
    }

    #[test]
    fn integer_path_matches_float_path() {
        let s = StateSpace::spin(4).unwrap();
        let k = Kernel::ring(4);
        let exact = duality_gap(&gen("cvp:1,1,1", &k, s), &gen("cvp:1,1,1", &k, s), &q(1, 3)).unwrap();
        let kf = k.to_f64();
        let f = |t: &str| build_generator(&ModelSpec::from_shorthand(t).unwrap(), &kf, s, false).unwrap();
        let float = duality_gap(&f("cvp:1,1,1"), &f("cvp:1,1,1"), &(1.0 / 3.0)).unwrap();
        assert!(!exact.exact_zero);
        assert!((exact.max_abs_f64() - float.max_abs_f64()).abs() < 1e-12);
        assert!((exact.frobenius - float.frobenius).abs() < 1e-10);
    }

    #[test]
    fn huge_denominators_fall_back_to_big_rationals() {
        // eta = 2^-70 overflows the 128-bit path on four sites
        let s = StateSpace::spin(4).unwrap();
        let k = Kernel::ring(4);
        let big = "cvp:1,1180591620717411303423,1";
        let eta = Rational::new(1.into(), num_bigint::BigInt::from(2).pow(70u32));
        assert!(duality_gap(&gen(big, &k, s), &gen(big, &k, s), &eta).unwrap().exact_zero);
        let off = eta.clone() * q(2, 1);
        assert!(!duality_gap(&gen(big, &k, s), &gen(big, &k, s), &off).unwrap().exact_zero);
    }

    #[test]
    fn asymmetric_kernel_breaks_self_duality() {
        let k = Kernel::raw(2, [(0, 1, q(1, 1)), (1, 0, q(2, 1))]).unwrap();
        let s = StateSpace::spin(2).unwrap();
        let g = gen("cvp:1,1,0", &k, s);
        let gap = duality_gap(&g, &g, &q(1, 2)).unwrap();
        assert!(gap.max_abs_f64() > 1e-3);
    }

    #[test]
    fn gap_is_antisymmetric_under_swapping_sides() {
        let s = StateSpace::spin(3).unwrap();
        let k = Kernel::ring(3);
        let a = gen("lsm:1,2,1/2,3,1", &k, s);
        let b = gen("cvp:1,2,1", &k, s);
        let eta = q(-1, 3);
        let ab = duality_gap(&a, &b, &eta).unwrap();
        let ba = duality_gap(&b, &a, &eta).unwrap();
        assert!(!ab.exact_zero);
        assert_eq!(ab.max_abs_entry, ba.max_abs_entry);
        assert_eq!(ab.frobenius, ba.frobenius);
    }

    #[test]
    fn thinning_kernel_examples() {
        let s = StateSpace::spin(2).unwrap();
        let id = thinning_kernel_matrix(&q(1, 1), s).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(*id.get(i, j), q((i == j) as i64, 1));
            }
        }
        let zero = thinning_kernel_matrix(&q(0, 1), s).unwrap();
        for i in 0..4 {
            assert_eq!(*zero.get(i, 0), q(1, 1));
        }
        let half = thinning_kernel_matrix(&q(1, 2), s).unwrap();
        assert_eq!(half.row(3), &[q(1, 4), q(1, 4), q(1, 4), q(1, 4)]);
        assert!(thinning_kernel_matrix(&q(3, 2), s).is_err());
        let c = StateSpace::count(1, 4).unwrap();
        let bin = thinning_kernel_matrix(&q(1, 2), c).unwrap();
        assert_eq!(*bin.get(4, 2), q(6, 16));
    }

    #[test]
    fn cvp_thins_to_its_walk_dual() {
        // CVP(1,1,1) is self-dual at 1/2 and dual to its eps = 1 walk at -1,
        // so the walk is a (1/2)/2 = 1/4 thinning of the CVP.
        let s = StateSpace::spin(3).unwrap();
        let k = Kernel::ring(3);
        let cvp = gen("cvp:1,1,1", &k, s);
        let rw = gen("rw:1,3/2,1/2,1/2", &k, s);
        assert!(intertwining_gap(&cvp, &rw, &q(1, 4)).unwrap().exact_zero);
        assert!(intertwining_gap(&cvp, &rw, &q(3, 10)).unwrap().max_abs_f64() > 1e-4);
    }

    #[test]
    fn verify_dupar_detects_perturbation() {
        let rates = LsmRates::from_ints([1, 2, 1, 3, 1]);
        let s = StateSpace::spin(3).unwrap();
        let k = Kernel::ring(3);
        let rep = verify_dupar(&rates, &q(-1, 2), &k, s).unwrap();
        assert!(rep.gap.exact_zero);
        let mut bumped = rep.dual.output.clone();
        bumped.c += q(1, 1000);
        let g = GeneratorMatrix::from_local(&LsmProcess::constant(&rates, &k).unwrap(), s).unwrap();
        let gb = GeneratorMatrix::from_local(&LsmProcess::constant(&bumped, &k).unwrap(), s).unwrap();
        assert!(duality_gap(&g, &gb, &q(-1, 2)).unwrap().max_abs_f64() > 1e-4);
    }

    #[test]
    fn count_space_gap_skips_boundary() {
        let k = Kernel::<Rational>::pair();
        let a = build_generator(&ModelSpec::from_shorthand("bps:1,1,1,1").unwrap(), &k, StateSpace::count(2, 4).unwrap(), true)
            .unwrap();
        let rep = duality_gap(&a, &a, &q(1, 2)).unwrap();
        assert_eq!(rep.evaluated_rows, 9);
        assert_eq!(rep.excluded_rows, 16);
    }
}
