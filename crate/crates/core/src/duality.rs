//! Closed-form dual rates, self-duality parameters, thinning factors and
//! Poissonization weights.
//!
//! The duality function throughout is `psi(x, y) = prod_i eta^(x(i) y(i))`.

use crate::error::{Error, Result};
use crate::model::mapping::cvp_as_lsm;
use crate::model::rates::{BpsParams, CvpParams, GeneralLsmRates, LsmRates, Mechanism, RwParams, SsmParams};
use crate::scalar::Scalar;

/// A duality parameter `eta != 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityParameter<T = f64> {
    eta: T,
}

impl<T: Scalar> DualityParameter<T> {
    pub fn new(eta: T) -> Result<Self> {
        if eta == T::one() {
            return Err(Error::EtaOne);
        }
        Ok(DualityParameter { eta })
    }

    pub fn value(&self) -> &T {
        &self.eta
    }

    /// `|eta| > 1`: fine on finite lattices, not for infinite-state uses.
    pub fn exceeds_unit(&self) -> bool {
        self.eta.abs() > T::one()
    }
}

fn check_eta<T: Scalar>(eta: &T) -> Result<()> {
    if *eta == T::one() {
        Err(Error::EtaOne)
    } else {
        Ok(())
    }
}

/// Result of a constant-rate dual computation.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPairReport<T = f64> {
    pub input: LsmRates<T>,
    pub eta: T,
    pub gamma: T,
    pub output: LsmRates<T>,
    pub valid: bool,
    pub violated_constraints: Vec<String>,
}

impl<T: Scalar> DualPairReport<T> {
    fn from_output(input: LsmRates<T>, eta: T, gamma: T, output: LsmRates<T>) -> Self {
        let violated_constraints: Vec<String> = ["a'", "b'", "c'", "d'", "e'"]
            .into_iter()
            .zip(output.as_array())
            .filter(|(_, v)| v.lt_zero())
            .map(|(n, v)| format!("{n} = {v} < 0"))
            .collect();
        DualPairReport { valid: violated_constraints.is_empty(), input, eta, gamma, output, violated_constraints }
    }
}

/// `gamma = (a + c - d + eta b) / (1 - eta)`.
pub fn dual_gamma<T: Scalar>(rates: &LsmRates<T>, eta: &T) -> Result<T> {
    check_eta(eta)?;
    let LsmRates { a, b, c, d, .. } = rates.clone();
    Ok((a + c - d + eta.clone() * b) / (T::one() - eta.clone()))
}

/// Dual rates `a + 2 eta gamma, b + gamma, c - (1+eta) gamma, d + gamma, e - gamma`.
pub fn dual_rates<T: Scalar>(rates: &LsmRates<T>, eta: &T) -> Result<DualPairReport<T>> {
    let g = dual_gamma(rates, eta)?;
    let one = T::one();
    let two = T::from_int(2);
    let out = LsmRates::formal(
        rates.a.clone() + two * eta.clone() * g.clone(),
        rates.b.clone() + g.clone(),
        rates.c.clone() - (one + eta.clone()) * g.clone(),
        rates.d.clone() + g.clone(),
        rates.e.clone() - g.clone(),
    );
    Ok(DualPairReport::from_output(rates.clone(), eta.clone(), g, out))
}

/// `eta = (d - a - c) / b`, the parameter under which the model is self-dual.
pub fn self_duality_parameter<T: Scalar>(rates: &LsmRates<T>) -> Result<DualityParameter<T>> {
    if !rates.b.gt_zero() {
        return Err(Error::Param(format!("self-duality needs b > 0, got b = {}", rates.b)));
    }
    let eta = (rates.d.clone() - rates.a.clone() - rates.c.clone()) / rates.b.clone();
    DualityParameter::new(eta)
}

/// Result of a site-pair dependent dual computation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralDualReport<T = f64> {
    pub input: GeneralLsmRates<T>,
    pub eta: T,
    /// `gamma[i * n + j] = gamma(i, j)`; zero on the diagonal.
    pub gamma: Vec<T>,
    pub output: GeneralLsmRates<T>,
    pub valid: bool,
    pub violated_constraints: Vec<String>,
    /// Entries where the equivalent characterization fails (empty when the
    /// two systems agree).
    pub cross_check_mismatches: Vec<String>,
}

impl<T: Scalar> GeneralDualReport<T> {
    pub fn gamma(&self, i: usize, j: usize) -> &T {
        &self.gamma[i * self.input.n_sites() + j]
    }

    pub fn cross_check_agrees(&self) -> bool {
        self.cross_check_mismatches.is_empty()
    }
}

fn general_gamma<T: Scalar>(r: &GeneralLsmRates<T>, eta: &T) -> Vec<T> {
    let n = r.n_sites();
    let denom = T::one() - eta.clone();
    let mut g = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let num = r.a(i, j).clone() + r.c(j, i).clone() - r.d(i, j).clone()
                    + eta.clone() * r.b(j, i).clone()
                    - r.e(i, j).clone()
                    + r.e(j, i).clone();
                g[i * n + j] = num / denom.clone();
            }
        }
    }
    g
}

/// Dual rates for site-pair dependent rates.
///
/// With `g(i,j)` as returned in the report,
///
/// ```text
/// a'(i,j) = a(i,j) + eta (g(i,j) + g(j,i))
/// b'(i,j) = b(j,i) + g(i,j)
/// c'(i,j) = c(i,j) - g(j,i) - eta g(i,j) + e(i,j) - e(j,i) + eta (b(i,j) - b(j,i))
/// d'(i,j) = d(i,j) + g(i,j) + e(i,j) - e(j,i)
/// e'(i,j) = e(j,i) - g(i,j)
/// ```
///
/// The output is also checked against the equivalent system of conserved
/// combinations; disagreements are listed in `cross_check_mismatches`.
pub fn dual_rates_general<T: Scalar>(rates: &GeneralLsmRates<T>, eta: &T) -> Result<GeneralDualReport<T>> {
    check_eta(eta)?;
    if !rates.is_a_symmetric() {
        return Err(Error::Param("annihilation rates a(i,j) must be symmetric".into()));
    }
    let n = rates.n_sites();
    let g = general_gamma(rates, eta);
    let gm = |i: usize, j: usize| g[i * n + j].clone();
    let mut out = GeneralLsmRates::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let e_diff = rates.e(i, j).clone() - rates.e(j, i).clone();
            let b_diff = rates.b(i, j).clone() - rates.b(j, i).clone();
            let a1 = rates.a(i, j).clone() + eta.clone() * (gm(i, j) + gm(j, i));
            let b1 = rates.b(j, i).clone() + gm(i, j);
            let c1 = rates.c(i, j).clone() - gm(j, i) - eta.clone() * gm(i, j) + e_diff.clone()
                + eta.clone() * b_diff;
            let d1 = rates.d(i, j).clone() + gm(i, j) + e_diff;
            let e1 = rates.e(j, i).clone() - gm(i, j);
            for (m, v) in Mechanism::ALL.into_iter().zip([a1, b1, c1, d1, e1]) {
                out.set(m, i, j, v);
            }
        }
    }
    let violated_constraints = out.negative_entries();
    let cross_check_mismatches = conserved_mismatches(rates, &out, &g, eta);
    Ok(GeneralDualReport {
        input: rates.clone(),
        eta: eta.clone(),
        gamma: g,
        output: out,
        valid: violated_constraints.is_empty(),
        violated_constraints,
        cross_check_mismatches,
    })
}

/// The equivalent characterization of the dual: for all `i != j`,
/// `a' + eta (e'ij + e'ji) = a + eta (eij + eji)`, `b'ij + e'ij = bji + eji`,
/// `g'(i,j) = -g(j,i)`, `d'ij + e'ij = dij + eij`, and
/// `e'ij - g'(j,i)/2 = eji - g(i,j)/2`.
fn conserved_mismatches<T: Scalar>(
    r: &GeneralLsmRates<T>,
    p: &GeneralLsmRates<T>,
    g: &[T],
    eta: &T,
) -> Vec<String> {
    let n = r.n_sites();
    let gp = general_gamma(p, eta);
    let half = T::from_ratio(1, 2);
    let tol = |x: &T, y: &T| {
        if T::EXACT {
            x == y
        } else {
            let scale = 1.0 + x.as_f64().abs().max(y.as_f64().abs());
            (x.as_f64() - y.as_f64()).abs() <= 1e-10 * scale
        }
    };
    let mut bad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let checks = [
                (
                    "a+eta(e_ij+e_ji)",
                    p.a(i, j).clone() + eta.clone() * (p.e(i, j).clone() + p.e(j, i).clone()),
                    r.a(i, j).clone() + eta.clone() * (r.e(i, j).clone() + r.e(j, i).clone()),
                ),
                ("b_ij+e_ij", p.b(i, j).clone() + p.e(i, j).clone(), r.b(j, i).clone() + r.e(j, i).clone()),
                ("gamma_ij", gp[i * n + j].clone(), -g[j * n + i].clone()),
                ("d_ij+e_ij", p.d(i, j).clone() + p.e(i, j).clone(), r.d(i, j).clone() + r.e(i, j).clone()),
                (
                    "e_ij-gamma_ji/2",
                    p.e(i, j).clone() - half.clone() * gp[j * n + i].clone(),
                    r.e(j, i).clone() - half.clone() * g[i * n + j].clone(),
                ),
            ];
            for (name, lhs, rhs) in checks {
                if !tol(&lhs, &rhs) {
                    bad.push(format!("{name} at ({i},{j}): {lhs} != {rhs}"));
                }
            }
        }
    }
    bad
}

/// Duals of a contact-voter process, `gamma = eta s / (1 - eta) - r`.
///
/// Besides the sign of every output rate, the report names which of the
/// closed-form conditions on `eta` fail:
/// `a', e' >= 0` iff `eta <= 0` or `eta = r/(r+s)`, and, when `m < s`,
/// `d' >= 0` iff `eta >= -m/(s-m)`.
pub fn cvp_dual_family<T: Scalar>(p: &CvpParams<T>, eta: &T) -> Result<DualPairReport<T>> {
    check_eta(eta)?;
    let mut report = dual_rates(&cvp_as_lsm(p), eta)?;
    let mut notes = Vec::new();
    let rs = p.r.clone() + p.s.clone();
    let self_dual = !rs.is_zero() && *eta == p.r.clone() / rs;
    if eta.gt_zero() && !self_dual {
        notes.push("a',e' >= 0 requires eta <= 0 or eta = r/(r+s)".to_string());
    }
    if p.m < p.s {
        let bound = -(p.m.clone()) / (p.s.clone() - p.m.clone());
        if *eta < bound {
            notes.push(format!("d' >= 0 requires eta >= -m/(s-m) = {bound}"));
        }
    }
    if report.output.c.lt_zero() {
        notes.push("c' >= 0 fails".to_string());
    }
    // Keep the per-rate lines as well; they carry the actual values.
    notes.append(&mut report.violated_constraints);
    report.violated_constraints = notes;
    Ok(report)
}

/// RW dual of a contact-voter process under parameter `-eps`:
/// `(eps, r + eps s/(1+eps), s/(1+eps), m - eps s/(1+eps))`.
pub fn cvp_rw_dual_pair<T: Scalar>(p: &CvpParams<T>, eps: &T) -> Result<RwParams<T>> {
    if eps.lt_zero() || *eps > T::one() {
        return Err(Error::Param(format!("eps = {eps} must lie in [0,1]")));
    }
    let one_eps = T::one() + eps.clone();
    let shift = eps.clone() * p.s.clone() / one_eps.clone();
    if p.m < shift {
        return Err(Error::Precondition(format!("m >= eps s/(1+eps) fails: {} < {}", p.m, shift)));
    }
    RwParams::new(eps.clone(), p.r.clone() + shift.clone(), p.s.clone() / one_eps, p.m.clone() - shift)
}

/// Inverse of [`cvp_rw_dual_pair`]: `(rho - eps beta, (1+eps) beta, delta + eps beta)`.
pub fn rw_cvp_dual_pair<T: Scalar>(p: &RwParams<T>) -> Result<CvpParams<T>> {
    let eb = p.eps.clone() * p.beta.clone();
    if p.rho < eb {
        return Err(Error::Precondition(format!("rho >= eps beta fails: {} < {}", p.rho, eb)));
    }
    CvpParams::new(
        p.rho.clone() - eb.clone(),
        (T::one() + p.eps.clone()) * p.beta.clone(),
        p.delta.clone() + eb,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinningFactor<T = f64> {
    pub v: T,
    /// The thinning relation is asserted only for `v` in `[0, 1]`.
    pub in_unit_interval: bool,
}

/// `v = (1 - eta2) / (1 - eta1)` for two processes dual to a common third
/// one with parameters `eta1` and `eta2`; the first is then a `v`-thinning
/// of the second.
pub fn thinning_factor<T: Scalar>(eta1: &T, eta2: &T) -> Result<ThinningFactor<T>> {
    check_eta(eta1)?;
    let v = (T::one() - eta2.clone()) / (T::one() - eta1.clone());
    let in_unit_interval = !v.lt_zero() && v <= T::one();
    Ok(ThinningFactor { v, in_unit_interval })
}

/// Branching particle system dual to the stepping stone model `p` through
/// `prod_i (1-(1+eps) x(i))^y(i)`: rates
/// `(eps r, s/(1+eps), (1-eps) r, m - eps s/(1+eps))`.
pub fn ssm_bps_dual(p: &SsmParams, eps: f64) -> Result<BpsParams<f64>> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Param(format!("eps = {eps} must lie in [0,1]")));
    }
    if !(p.s > 0.0) {
        return Err(Error::Precondition("the branching dual needs s > 0".into()));
    }
    let shed = eps * p.s / (1.0 + eps);
    if p.m < shed - 1e-12 {
        return Err(Error::Precondition(format!("m = {} must be at least eps s/(1+eps) = {shed}", p.m)));
    }
    BpsParams::new(eps * p.r, p.s / (1.0 + eps), (1.0 - eps) * p.r, (p.m - shed).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PoissonizationWeight {
    /// Weight computed from the oracle-determined duality constant.
    pub weight: f64,
    /// Weight as printed in the literature, `(1+eps)^-1 r/s`.
    pub stated: f64,
    pub constant: f64,
    pub eps: f64,
}

impl PoissonizationWeight {
    pub fn agrees_with_stated(&self) -> bool {
        (self.weight - self.stated).abs() <= 1e-9 * (1.0 + self.weight.abs())
    }
}

/// `(1+eps)^-1 * kappa` for a given stepping stone duality constant `kappa`.
pub fn poissonization_weight_with(p: &SsmParams, eps: f64, kappa: f64) -> Result<PoissonizationWeight> {
    if !(p.s > 0.0) {
        return Err(Error::Param("Poissonization needs s > 0".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Param(format!("eps = {eps} must lie in [0,1]")));
    }
    Ok(PoissonizationWeight { weight: kappa / (1.0 + eps), stated: p.r / p.s / (1.0 + eps), constant: kappa, eps })
}

/// Poissonization weight with the constant taken from the generator-identity
/// oracle for the stepping stone self-duality.
pub fn poissonization_weight(p: &SsmParams, eps: f64) -> Result<PoissonizationWeight> {
    if !(p.s > 0.0) {
        return Err(Error::Param("Poissonization needs s > 0".into()));
    }
    let found = crate::stochastic::oracle::ssm_self_constant(p)?;
    poissonization_weight_with(p, eps, found)
}
