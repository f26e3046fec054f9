use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Motion kernel on a finite site set: the rates `q(i, j)` at which the
/// underlying motion jumps from `i` to `j`.
///
/// Kernels built with [`Kernel::new`] have unit row sums. [`Kernel::raw`]
/// keeps the supplied rates verbatim, which is the only way to obtain a kernel
/// whose rates are not symmetric on two sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T = f64> {
    n_sites: usize,
    out: Vec<Vec<(usize, T)>>,
    incoming: Vec<Vec<usize>>,
    symmetric: bool,
    raw: bool,
}

fn collect_weights<T: Scalar>(
    n_sites: usize,
    weights: impl IntoIterator<Item = (usize, usize, T)>,
) -> Result<Vec<BTreeMap<usize, T>>> {
    if n_sites == 0 {
        return Err(Error::Kernel("a kernel needs at least one site".into()));
    }
    let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n_sites];
    for (i, j, w) in weights {
        if i >= n_sites || j >= n_sites {
            return Err(Error::Kernel(format!("pair ({i},{j}) outside 0..{n_sites}")));
        }
        if i == j {
            return Err(Error::Kernel(format!("diagonal pair ({i},{i})")));
        }
        if w.lt_zero() {
            return Err(Error::Kernel(format!("negative weight {w} on ({i},{j})")));
        }
        if w.is_zero() {
            continue;
        }
        let slot = rows[i].entry(j).or_insert_with(T::zero);
        *slot = slot.clone() + w;
    }
    Ok(rows)
}

fn rows_close<T: Scalar>(x: &T, y: &T) -> bool {
    if T::EXACT {
        x == y
    } else {
        let (x, y) = (x.as_f64(), y.as_f64());
        (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
    }
}

impl<T: Scalar> Kernel<T> {
    /// Builds a kernel from unnormalized weights on ordered pairs.
    ///
    /// All rows must share one common sum, which is divided out; a row that
    /// would need its own rescaling is an error, since that would destroy the
    /// symmetry of the weights.
    pub fn new(n_sites: usize, weights: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let rows = collect_weights(n_sites, weights)?;
        if n_sites == 1 {
            return Ok(Self::from_rows(rows, false));
        }
        let sums: Vec<T> = rows
            .iter()
            .map(|r| r.values().cloned().fold(T::zero(), |a, b| a + b))
            .collect();
        if let Some(i) = sums.iter().position(|s| s.is_zero()) {
            return Err(Error::Kernel(format!("site {i} is isolated (zero row)")));
        }
        let common = sums[0].clone();
        if let Some(i) = sums.iter().position(|s| !rows_close(s, &common)) {
            return Err(Error::Kernel(format!(
                "row {i} sums to {} but row 0 sums to {common}; rows need a common normalization",
                sums[i]
            )));
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|(j, w)| (j, w / common.clone())).collect())
            .collect();
        Ok(Self::from_rows(rows, false))
    }

    /// Keeps the weights as rates without any normalization; row sums and
    /// symmetry are not required.
    pub fn raw(n_sites: usize, weights: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let rows = collect_weights(n_sites, weights)?;
        Ok(Self::from_rows(rows, true))
    }

    pub(crate) fn from_rows(rows: Vec<BTreeMap<usize, T>>, raw: bool) -> Self {
        let n_sites = rows.len();
        let out: Vec<Vec<(usize, T)>> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
        let mut incoming = vec![Vec::new(); n_sites];
        for (i, row) in out.iter().enumerate() {
            for (j, _) in row {
                incoming[*j].push(i);
            }
        }
        let mut kernel = Kernel { n_sites, out, incoming, symmetric: true, raw };
        kernel.symmetric = (0..n_sites).all(|i| {
            kernel.out[i]
                .iter()
                .all(|(j, w)| &kernel.rate(*j, i) == w)
        });
        kernel
    }

    /// The trivial kernel on a single site (no motion).
    pub fn single() -> Self {
        Self::from_rows(vec![BTreeMap::new()], false)
    }

    /// Two sites exchanging at unit rate.
    pub fn pair() -> Self {
        Self::complete(2)
    }

    pub fn complete(n: usize) -> Self {
        if n == 1 {
            return Self::single();
        }
        let w = T::from_ratio(1, (n - 1) as i64);
        let rows = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| (j, w.clone())).collect())
            .collect();
        Self::from_rows(rows, false)
    }

    /// Nearest-neighbour ring; `ring(2)` coincides with [`Kernel::pair`].
    pub fn ring(n: usize) -> Self {
        match n {
            1 => Self::single(),
            2 => Self::pair(),
            _ => {
                let half = T::from_ratio(1, 2);
                let rows = (0..n)
                    .map(|i| {
                        let mut row = BTreeMap::new();
                        row.insert((i + 1) % n, half.clone());
                        row.insert((i + n - 1) % n, half.clone());
                        row
                    })
                    .collect();
                Self::from_rows(rows, false)
            }
        }
    }

    /// Resolves `"single"`, `"pair"`, `"ring:n"`, or `"complete:n"`.
    pub fn preset(name: &str) -> Result<Self> {
        let bad = || Error::Kernel(format!("unknown kernel preset `{name}`"));
        match name.trim() {
            "single" => Ok(Self::single()),
            "pair" => Ok(Self::pair()),
            other => {
                let (kind, n) = other.split_once(':').ok_or_else(bad)?;
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(Error::Kernel("preset needs at least one site".into()));
                }
                match kind.trim() {
                    "ring" => Ok(Self::ring(n)),
                    "complete" => Ok(Self::complete(n)),
                    _ => Err(bad()),
                }
            }
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_raw(&self) -> bool {
        self.raw
    }

    pub fn rate(&self, i: usize, j: usize) -> T {
        match self.out[i].binary_search_by_key(&j, |(k, _)| *k) {
            Ok(pos) => self.out[i][pos].1.clone(),
            Err(_) => T::zero(),
        }
    }

    /// Targets of site `i` with positive rate, sorted by site.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.out[i]
    }

    /// Sites `k` with `q(k, i) > 0`.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.incoming[i]
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.out[i].iter().fold(T::zero(), |acc, (_, w)| acc + w.clone())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(j, w)| (i, *j, w)))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Kernel<U> {
        Kernel {
            n_sites: self.n_sites,
            out: self
                .out
                .iter()
                .map(|row| row.iter().map(|(j, w)| (*j, f(w))).collect())
                .collect(),
            incoming: self.incoming.clone(),
            symmetric: self.symmetric,
            raw: self.raw,
        }
    }

    pub fn to_f64(&self) -> Kernel<f64> {
        self.map(|w| w.as_f64())
    }
}

/// Serializable kernel description: a preset name or an explicit pair list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Preset(String),
    Pairs {
        n_sites: usize,
        /// `[i, j, weight]` triples; weights may be numbers or `"p/q"` strings.
        pairs: Vec<(usize, usize, crate::model::spec::NumLit)>,
        #[serde(default)]
        raw: bool,
    },
}

impl KernelSpec {
    pub fn build<T: Scalar>(&self) -> Result<Kernel<T>> {
        match self {
            KernelSpec::Preset(name) => Kernel::preset(name),
            KernelSpec::Pairs { n_sites, pairs, raw } => {
                let weights = pairs
                    .iter()
                    .map(|(i, j, w)| Ok((*i, *j, w.value::<T>()?)))
                    .collect::<Result<Vec<_>>>()?;
                if *raw {
                    Kernel::raw(*n_sites, weights)
                } else {
                    Kernel::new(*n_sites, weights)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn two_site_kernel() {
        let k = Kernel::<Rational>::new(2, [(0, 1, r(1, 1)), (1, 0, r(1, 1))]).unwrap();
        assert_eq!(k.rate(0, 1), r(1, 1));
        assert_eq!(k.rate(1, 0), r(1, 1));
        assert!(k.is_symmetric());
    }

    #[test]
    fn ring_of_four() {
        let w = (0..4).flat_map(|i| [(i, (i + 1) % 4, r(1, 1)), (i, (i + 3) % 4, r(1, 1))]);
        let k = Kernel::<Rational>::new(4, w).unwrap();
        for i in 0..4 {
            assert_eq!(k.rate(i, (i + 1) % 4), r(1, 2));
            assert_eq!(k.rate(i, (i + 3) % 4), r(1, 2));
            assert_eq!(k.rate(i, (i + 2) % 4), r(0, 1));
        }
        assert!(k.is_symmetric());
        assert_eq!(k, Kernel::ring(4));
    }

    #[test]
    fn inconsistent_rows_rejected_but_raw_admitted() {
        let w = [(0, 1, r(1, 1)), (1, 0, r(2, 1))];
        assert!(matches!(Kernel::<Rational>::new(2, w.clone()), Err(Error::Kernel(_))));
        let raw = Kernel::<Rational>::raw(2, w).unwrap();
        assert!(!raw.is_symmetric());
        assert!(raw.is_raw());
        assert_eq!(raw.rate(1, 0), r(2, 1));
    }

    #[test]
    fn isolated_site_rejected() {
        let err = Kernel::<f64>::new(3, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("isolated"));
    }

    #[test]
    fn common_scale_is_divided_out() {
        let k = Kernel::<f64>::new(2, [(0, 1, 3.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(k.rate(0, 1), 1.0);
    }

    #[test]
    fn presets() {
        let k = Kernel::<Rational>::preset("complete:4").unwrap();
        assert_eq!(k.rate(2, 0), r(1, 3));
        assert_eq!(Kernel::<f64>::preset("ring:2").unwrap(), Kernel::pair());
        assert_eq!(Kernel::<f64>::preset("single").unwrap().n_sites(), 1);
        assert!(Kernel::<f64>::preset("torus:3").is_err());
        assert!(Kernel::<f64>::preset("ring:0").is_err());
        for n in 1..8 {
            let k = Kernel::<Rational>::ring(n);
            for i in 0..n {
                let expect = if n == 1 { r(0, 1) } else { r(1, 1) };
                assert_eq!(k.row_sum(i), expect);
            }
        }
    }

    #[test]
    fn directed_cycle_is_flagged_asymmetric() {
        let k = Kernel::<f64>::new(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        assert!(!k.is_symmetric());
        assert_eq!(k.in_neighbors(0), &[2]);
    }
}
