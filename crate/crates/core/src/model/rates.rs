use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::kernel::Kernel;
use crate::scalar::Scalar;

/// Annihilation, branching, coalescence, death, and exclusion rates of a
/// Lloyd-Sudbury model, each modulated by the motion kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct LsmRates<T = f64> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub e: T,
}

impl<T: Scalar> LsmRates<T> {
    /// Checked constructor: every rate must be nonnegative.
    pub fn new(a: T, b: T, c: T, d: T, e: T) -> Result<Self> {
        let rates = Self::formal(a, b, c, d, e);
        rates.check_nonnegative()?;
        Ok(rates)
    }

    /// Unchecked constructor admitting negative ("formal") rates.
    pub fn formal(a: T, b: T, c: T, d: T, e: T) -> Self {
        LsmRates { a, b, c, d, e }
    }

    pub fn from_ints(v: [i64; 5]) -> Self {
        let [a, b, c, d, e] = v.map(T::from_int);
        Self::formal(a, b, c, d, e)
    }

    pub fn as_array(&self) -> [T; 5] {
        [self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone(), self.e.clone()]
    }

    pub fn negative_fields(&self) -> Vec<&'static str> {
        ["a", "b", "c", "d", "e"]
            .into_iter()
            .zip(self.as_array())
            .filter(|(_, v)| v.lt_zero())
            .map(|(n, _)| n)
            .collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.negative_fields().is_empty()
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        let neg = self.negative_fields();
        if neg.is_empty() {
            Ok(())
        } else {
            Err(Error::NegativeRate(format!("LSM rates {neg:?} < 0 in {self}")))
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LsmRates<U> {
        LsmRates { a: f(&self.a), b: f(&self.b), c: f(&self.c), d: f(&self.d), e: f(&self.e) }
    }

    pub fn to_f64(&self) -> LsmRates<f64> {
        self.map(|x| x.as_f64())
    }
}

impl<T: Scalar> std::fmt::Display for LsmRates<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {}, {})", self.a, self.b, self.c, self.d, self.e)
    }
}

/// Which of the five mechanisms a rate map describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Annihilation,
    Branching,
    Coalescence,
    Death,
    Exclusion,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [
        Mechanism::Annihilation,
        Mechanism::Branching,
        Mechanism::Coalescence,
        Mechanism::Death,
        Mechanism::Exclusion,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Mechanism::Annihilation => "a",
            Mechanism::Branching => "b",
            Mechanism::Coalescence => "c",
            Mechanism::Death => "d",
            Mechanism::Exclusion => "e",
        }
    }
}

/// Site-pair dependent rates `a(i,j), ..., e(i,j)`, stored densely.
///
/// Diagonal entries are always zero. `a` must be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralLsmRates<T = f64> {
    n_sites: usize,
    maps: [Vec<T>; 5],
}

impl<T: Scalar> GeneralLsmRates<T> {
    pub fn zeros(n_sites: usize) -> Self {
        let zero = vec![T::zero(); n_sites * n_sites];
        GeneralLsmRates {
            n_sites,
            maps: [zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero],
        }
    }

    /// Constant rates modulated by a kernel: `a(i,j) = a * q(i,j)` and so on.
    pub fn from_constant(rates: &LsmRates<T>, q: &Kernel<T>) -> Self {
        let mut g = Self::zeros(q.n_sites());
        let consts = rates.as_array();
        for (i, j, w) in q.pairs() {
            for (m, c) in Mechanism::ALL.into_iter().zip(consts.iter()) {
                g.set(m, i, j, c.clone() * w.clone());
            }
        }
        g
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn get(&self, m: Mechanism, i: usize, j: usize) -> &T {
        &self.maps[m as usize][i * self.n_sites + j]
    }

    pub fn set(&mut self, m: Mechanism, i: usize, j: usize, v: T) {
        assert!(i != j, "diagonal rates are not defined");
        self.maps[m as usize][i * self.n_sites + j] = v;
    }

    pub fn a(&self, i: usize, j: usize) -> &T {
        self.get(Mechanism::Annihilation, i, j)
    }
    pub fn b(&self, i: usize, j: usize) -> &T {
        self.get(Mechanism::Branching, i, j)
    }
    pub fn c(&self, i: usize, j: usize) -> &T {
        self.get(Mechanism::Coalescence, i, j)
    }
    pub fn d(&self, i: usize, j: usize) -> &T {
        self.get(Mechanism::Death, i, j)
    }
    pub fn e(&self, i: usize, j: usize) -> &T {
        self.get(Mechanism::Exclusion, i, j)
    }

    pub fn is_a_symmetric(&self) -> bool {
        (0..self.n_sites).all(|i| (0..i).all(|j| self.a(i, j) == self.a(j, i)))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.maps.iter().all(|m| m.iter().all(|v| !v.lt_zero()))
    }

    /// Lists `"b(0,2) = -1/3"` style descriptions of negative entries.
    pub fn negative_entries(&self) -> Vec<String> {
        let mut out = Vec::new();
        for m in Mechanism::ALL {
            for i in 0..self.n_sites {
                for j in 0..self.n_sites {
                    let v = self.get(m, i, j);
                    if v.lt_zero() {
                        out.push(format!("{}({i},{j}) = {v}", m.symbol()));
                    }
                }
            }
        }
        out
    }

    /// Rejects asymmetric `a` and, in process mode, negative entries.
    pub fn validate(&self, process: bool) -> Result<()> {
        if !self.is_a_symmetric() {
            return Err(Error::Param("annihilation rates a(i,j) must be symmetric".into()));
        }
        if process {
            let neg = self.negative_entries();
            if !neg.is_empty() {
                return Err(Error::NegativeRate(neg.join(", ")));
            }
        }
        Ok(())
    }

    /// Ordered pairs `(i, j)` with at least one nonzero rate.
    pub fn active_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.maps.iter().any(|m| !m[i * n + j].is_zero()))
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> GeneralLsmRates<U> {
        GeneralLsmRates {
            n_sites: self.n_sites,
            maps: std::array::from_fn(|k| self.maps[k].iter().map(&f).collect()),
        }
    }

    pub fn to_f64(&self) -> GeneralLsmRates<f64> {
        self.map(|x| x.as_f64())
    }

    /// General-form rates of a contact-voter process on an arbitrary (possibly
    /// asymmetric, unnormalized) kernel:
    /// `b(i,j) = (r+s) q(i,j)`, `d(i,j) = r q(j,i) + m q(i,j)`, `c(j,i) = m q(i,j)`.
    ///
    /// The mutation part reproduces the per-site death rate `m` only when the
    /// rows of `q` sum to one.
    pub fn from_cvp(p: &CvpParams<T>, q: &Kernel<T>) -> Self {
        let mut g = Self::zeros(q.n_sites());
        let rs = p.r.clone() + p.s.clone();
        for (i, j, w) in q.pairs() {
            g.set(Mechanism::Branching, i, j, rs.clone() * w.clone());
            let d_ij = g.d(i, j).clone() + p.m.clone() * w.clone();
            g.set(Mechanism::Death, i, j, d_ij);
            let d_ji = g.d(j, i).clone() + p.r.clone() * w.clone();
            g.set(Mechanism::Death, j, i, d_ji);
            let c_ji = g.c(j, i).clone() + p.m.clone() * w.clone();
            g.set(Mechanism::Coalescence, j, i, c_ji);
        }
        g
    }
}

fn require_nonneg<T: Scalar>(name: &str, v: &T) -> Result<()> {
    if v.lt_zero() {
        Err(Error::Param(format!("{name} = {v} must be >= 0")))
    } else {
        Ok(())
    }
}

/// Contact-voter process: resampling `r`, selection `s`, mutation `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvpParams<T = f64> {
    pub r: T,
    pub s: T,
    pub m: T,
}

impl<T: Scalar> CvpParams<T> {
    pub fn new(r: T, s: T, m: T) -> Result<Self> {
        require_nonneg("r", &r)?;
        require_nonneg("s", &s)?;
        require_nonneg("m", &m)?;
        Ok(CvpParams { r, s, m })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> CvpParams<U> {
        CvpParams { r: f(&self.r), s: f(&self.s), m: f(&self.m) }
    }
}

/// Random walks with annihilation probability `eps`, jump rate `rho`,
/// branching rate `beta`, and death rate `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct RwParams<T = f64> {
    pub eps: T,
    pub rho: T,
    pub beta: T,
    pub delta: T,
}

impl<T: Scalar> RwParams<T> {
    pub fn new(eps: T, rho: T, beta: T, delta: T) -> Result<Self> {
        if eps.lt_zero() || eps > T::one() {
            return Err(Error::Param(format!("eps = {eps} must lie in [0,1]")));
        }
        require_nonneg("rho", &rho)?;
        require_nonneg("beta", &beta)?;
        require_nonneg("delta", &delta)?;
        Ok(RwParams { eps, rho, beta, delta })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> RwParams<U> {
        RwParams { eps: f(&self.eps), rho: f(&self.rho), beta: f(&self.beta), delta: f(&self.delta) }
    }
}

/// Branching particle system: pairwise annihilation `a`, branching `b`,
/// pairwise coalescence `c`, death `d`, with unit-rate migration along `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct BpsParams<T = f64> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> BpsParams<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        for (n, v) in [("a", &a), ("b", &b), ("c", &c), ("d", &d)] {
            require_nonneg(n, v)?;
        }
        Ok(BpsParams { a, b, c, d })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> BpsParams<U> {
        BpsParams { a: f(&self.a), b: f(&self.b), c: f(&self.c), d: f(&self.d) }
    }
}

/// Stepping stone model: resampling `r`, selection `s`, mutation `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsmParams {
    pub r: f64,
    pub s: f64,
    pub m: f64,
}

impl SsmParams {
    pub fn new(r: f64, s: f64, m: f64) -> Result<Self> {
        require_nonneg("r", &r)?;
        require_nonneg("s", &s)?;
        require_nonneg("m", &m)?;
        Ok(SsmParams { r, s, m })
    }
}

/// Diffusion coefficient convention for the super random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoiseConvention {
    /// Diffusion coefficient `sqrt(alpha z)`.
    SqrtAlpha,
    /// Diffusion coefficient `sqrt(2 alpha z)`.
    SqrtTwoAlpha,
}

impl NoiseConvention {
    pub const ALL: [NoiseConvention; 2] = [NoiseConvention::SqrtAlpha, NoiseConvention::SqrtTwoAlpha];

    /// Variance rate per unit mass: `alpha` or `2 alpha`.
    pub fn variance_factor(self) -> f64 {
        match self {
            NoiseConvention::SqrtAlpha => 1.0,
            NoiseConvention::SqrtTwoAlpha => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseConvention::SqrtAlpha => "SQRT_ALPHA",
            NoiseConvention::SqrtTwoAlpha => "SQRT_TWO_ALPHA",
        }
    }
}

/// Super random walk with quadratic killing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrwParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub noise: NoiseConvention,
}

impl SrwParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, noise: NoiseConvention) -> Result<Self> {
        if !(alpha > 0.0) || !(gamma > 0.0) {
            return Err(Error::Param(format!(
                "alpha = {alpha} and gamma = {gamma} must be strictly positive"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::Param("beta must be finite".into()));
        }
        Ok(SrwParams { alpha, beta, gamma, noise })
    }

    /// Squared diffusion coefficient at mass `z`.
    pub fn variance_rate(&self, z: f64) -> f64 {
        self.noise.variance_factor() * self.alpha * z
    }
}
