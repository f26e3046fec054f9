//! VERIFY_EXACT and THINNING_EXACT.

use std::collections::HashMap;

use lsmdual_core::duality::self_duality_parameter;
use lsmdual_core::exact::{build_generator, duality_gap, intertwining_gap, verify_dupar, verify_dupar_general, GapReport, StateSpace};
use lsmdual_core::model::{GeneralLsmRates, Kernel, KernelSpec, LsmRates, Mechanism, ModelSpec, NumLit};
use lsmdual_core::thinning::{thin_composition_exact, thin_generating_check};
use lsmdual_core::{Rational, Scalar};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{kernel_label, num_label, space_for, Ctx, Outcome};
use crate::error::Result;
use crate::report::{Check, Table};
use crate::scenario::Mode;

const DEFAULT_GAP_TOLERANCE: f64 = 1e-10;
const DEFAULT_CONTROL_GAP: f64 = 1e-4;
const DEFAULT_THINNING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactCheck {
    /// Duality gap between a model and a named or computed dual.
    Duality,
    /// Duality gap for site-pair dependent rates, plus the cross-check.
    General,
    /// `G2 T - T G1` for a thinning kernel `T`.
    Intertwining,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactCase {
    pub model: String,
    /// Omitted: the dual is computed from the rates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<NumLit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<Vec<KernelSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<NumLit>,
    /// A deliberately wrong thinning factor whose gap must be large.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_v: Option<NumLit>,
}

/// Random rate tuples `p/q` with `0 <= p <= max_numerator`,
/// `1 <= q <= max_denominator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomRates {
    pub count: usize,
    #[serde(default = "default_numerator")]
    pub max_numerator: i64,
    #[serde(default = "default_denominator")]
    pub max_denominator: i64,
    /// Lattice sizes for site-pair dependent rates, used in turn.
    #[serde(default = "default_sites")]
    pub sites: Vec<usize>,
    /// Skip cases whose dual has a negative rate.
    #[serde(default = "yes")]
    pub require_valid: bool,
}

fn default_numerator() -> i64 {
    9
}

fn default_denominator() -> i64 {
    4
}

fn default_sites() -> Vec<usize> {
    vec![2, 3]
}

fn yes() -> bool {
    true
}

fn default_cap() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactParams {
    pub check: ExactCheck,
    #[serde(default)]
    pub cases: Vec<ExactCase>,
    #[serde(default)]
    pub kernels: Vec<KernelSpec>,
    /// Numbers, or `"self"` for the self-duality parameter of the model.
    #[serde(default)]
    pub eta: Vec<NumLit>,
    /// Per-site cap for count-valued models.
    #[serde(default = "default_cap")]
    pub cap: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomRates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinningParams {
    pub thetas: Vec<NumLit>,
    /// Retention probabilities; the generating-function check pairs every
    /// theta with every keep, the composition check every keep with every keep.
    pub keeps: Vec<NumLit>,
    #[serde(default = "default_max_total")]
    pub max_total: u32,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

fn default_max_total() -> u32 {
    8
}

fn default_max_sites() -> usize {
    3
}

/// Worst gap over a family of cases that share a check.
struct Group {
    label: String,
    evaluated: usize,
    skipped: usize,
    max_abs: f64,
    all_zero: bool,
    /// Float mode only: largest term size and worst gap relative to it.
    term_scale: f64,
    max_relative: f64,
}

#[derive(Default)]
struct Groups {
    order: Vec<Group>,
    index: HashMap<String, usize>,
}

impl Groups {
    fn get(&mut self, label: String) -> &mut Group {
        let n = self.order.len();
        let i = *self.index.entry(label.clone()).or_insert(n);
        if i == n {
            self.order.push(Group { label, evaluated: 0, skipped: 0, max_abs: 0.0, all_zero: true, term_scale: 0.0, max_relative: 0.0 });
        }
        &mut self.order[i]
    }

    fn add<T: Scalar>(&mut self, label: String, gap: &GapReport<T>) {
        let g = self.get(label);
        g.evaluated += 1;
        g.max_abs = g.max_abs.max(gap.max_abs_f64());
        g.all_zero &= gap.exact_zero;
        g.term_scale = g.term_scale.max(gap.term_scale);
        if gap.term_scale > 0.0 {
            g.max_relative = g.max_relative.max(gap.max_abs_f64() / gap.term_scale);
        }
    }

    fn skip(&mut self, label: String) {
        self.get(label).skipped += 1;
    }

    fn checks<T: Scalar>(&self, tol: f64) -> Vec<Check> {
        self.order
            .iter()
            .map(|g| {
                let name = format!("gap[{}] over {} cases", g.label, g.evaluated);
                if g.evaluated == 0 {
                    Check::holds(format!("gap[{}]: no admissible cases", g.label), Some(false))
                } else if T::EXACT {
                    Check::exact_zero(name, g.max_abs, g.all_zero)
                } else {
                    Check::le(name, g.max_abs, tol)
                }
            })
            .collect()
    }

    fn summary(&self) -> serde_json::Value {
        self.order
            .iter()
            .map(|g| {
                json!({
                    "group": g.label,
                    "evaluated": g.evaluated,
                    "skipped": g.skipped,
                    "max_abs_gap": g.max_abs,
                    "term_scale": g.term_scale,
                    "max_relative_gap": g.max_relative,
                })
            })
            .collect()
    }

    /// One line per group with the roundoff scale; empty in exact mode.
    fn scale_log<T: Scalar>(&self) -> Vec<String> {
        if T::EXACT {
            return Vec::new();
        }
        self.order
            .iter()
            .filter(|g| g.evaluated > 0)
            .map(|g| format!("gap[{}]: terms up to {:e}, worst gap / term size {:e}", g.label, g.term_scale, g.max_relative))
            .collect()
    }
}

fn gap_row<T: Scalar>(table: &mut Table, case: &str, kernel: &str, eta: &str, extra: &str, gap: &GapReport<T>) {
    let worst = gap.worst.as_ref().map(|(x, y)| format!("{x:?}|{y:?}")).unwrap_or_default();
    table.push([
        case.to_string(),
        kernel.to_string(),
        eta.to_string(),
        extra.to_string(),
        gap.max_abs_entry.to_string(),
        gap.exact_zero.to_string(),
        gap.evaluated_rows.to_string(),
        gap.excluded_rows.to_string(),
        worst,
    ]);
}

fn gap_table(extra: &str) -> Table {
    Table::new(["case", "kernel", "eta", extra, "max_abs_gap", "exact_zero", "rows", "excluded_rows", "worst"])
}

fn random_ratio<T: Scalar>(rng: &mut lsmdual_core::rng::Rng, spec: &RandomRates) -> T {
    let n = rng.random_range(0..=spec.max_numerator);
    let d = rng.random_range(1..=spec.max_denominator);
    T::from_ratio(n, d)
}

pub fn run_exact(ctx: &Ctx, p: &ExactParams) -> Result<Outcome> {
    match ctx.mode {
        Mode::Rational => run_exact_in::<Rational>(ctx, p),
        Mode::Float => run_exact_in::<f64>(ctx, p),
    }
}

fn run_exact_in<T: Scalar>(ctx: &Ctx, p: &ExactParams) -> Result<Outcome> {
    if let Some(r) = &p.random {
        if r.max_numerator < 0 || r.max_denominator < 1 {
            return Err(ctx.field("params.random", "need max_numerator >= 0 and max_denominator >= 1"));
        }
    }
    match p.check {
        ExactCheck::Duality => duality::<T>(ctx, p),
        ExactCheck::General => general::<T>(ctx, p),
        ExactCheck::Intertwining => intertwining::<T>(ctx, p),
    }
}

fn kernels_for<'a>(ctx: &Ctx, p: &'a ExactParams, case: Option<&'a ExactCase>, field: &str) -> Result<&'a [KernelSpec]> {
    let ks = case.and_then(|c| c.kernels.as_deref()).unwrap_or(&p.kernels);
    if ks.is_empty() {
        return Err(ctx.field(field, "no kernels given"));
    }
    Ok(ks)
}

/// `eta` as a number, or the self-duality parameter of `rates`.
fn resolve_eta<T: Scalar>(ctx: &Ctx, field: &str, eta: &NumLit, rates: Option<&LsmRates<T>>) -> Result<Option<T>> {
    if let NumLit::Text(s) = eta {
        if s.trim() == "self" {
            let rates = rates.ok_or_else(|| ctx.field(field, "`self` needs a model with constant rates"))?;
            return Ok(self_duality_parameter(rates).ok().map(|d| d.value().clone()));
        }
    }
    ctx.number::<T>(field, eta).map(Some)
}

enum Subject<T> {
    Named { label: String, model: ModelSpec, dual: Option<ModelSpec> },
    Random { label: String, rates: LsmRates<T> },
}

fn duality<T: Scalar>(ctx: &Ctx, p: &ExactParams) -> Result<Outcome> {
    let mut subjects: Vec<(Subject<T>, Option<&ExactCase>)> = Vec::new();
    for (i, c) in p.cases.iter().enumerate() {
        let model = ctx.model(&format!("params.cases[{i}].model"), Some(&c.model))?;
        let dual = c.dual.as_deref().map(|d| ctx.model(&format!("params.cases[{i}].dual"), Some(d))).transpose()?;
        let label = match &c.dual {
            Some(d) => format!("{} ~ {d}", c.model),
            None => c.model.clone(),
        };
        subjects.push((Subject::Named { label, model, dual }, Some(c)));
    }
    if let Some(spec) = &p.random {
        let mut rng = ctx.seed()?.rng();
        for i in 0..spec.count {
            let v: Vec<T> = (0..5).map(|_| random_ratio(&mut rng, spec)).collect();
            let rates = LsmRates::formal(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone(), v[4].clone());
            subjects.push((Subject::Random { label: format!("random#{i}"), rates }, None));
        }
    }
    if subjects.is_empty() {
        return Err(ctx.field("params.cases", "no cases and no random block"));
    }
    let require_valid = p.random.as_ref().is_some_and(|r| r.require_valid);

    let mut groups = Groups::default();
    let mut table = gap_table("dual_valid");
    for (idx, (subject, case)) in subjects.iter().enumerate() {
        let etas = case.and_then(|c| c.eta.as_deref()).unwrap_or(&p.eta);
        if etas.is_empty() {
            return Err(ctx.field("params.eta", "no duality parameters given"));
        }
        let kernels = kernels_for(ctx, p, *case, "params.kernels")?;
        for kspec in kernels {
            let q: Kernel<T> = ctx.kernel("params.kernels", kspec)?;
            let klabel = kernel_label(kspec);
            for eta_spec in etas {
                let elabel = num_label(eta_spec);
                let group = match subject {
                    Subject::Named { label, .. } => format!("{label}, {klabel}, eta={elabel}"),
                    Subject::Random { .. } => format!("{klabel}, eta={elabel}"),
                };
                let (case_label, rates) = match subject {
                    Subject::Named { label, model, .. } => (label, model.lsm_rates::<T>()?),
                    Subject::Random { label, rates } => (label, Some(rates.clone())),
                };
                let Some(eta) = resolve_eta(ctx, "params.eta", eta_spec, rates.as_ref())? else {
                    groups.skip(group);
                    continue;
                };
                let (valid, gap) = match subject {
                    Subject::Named { model, dual: Some(dual), .. } => {
                        let g = build_generator::<T>(model, &q, space_for(model, &q, p.cap)?, false)?;
                        let gd = build_generator::<T>(dual, &q, space_for(dual, &q, p.cap)?, false)?;
                        (None, duality_gap(&g, &gd, &eta)?)
                    }
                    _ => {
                        let rates = rates.as_ref().ok_or_else(|| {
                            ctx.field(&format!("params.cases[{idx}].dual"), "required for models without constant rates")
                        })?;
                        let rep = verify_dupar(rates, &eta, &q, StateSpace::spin(q.n_sites())?)?;
                        (Some(rep.dual.valid), rep.gap)
                    }
                };
                if require_valid && valid == Some(false) {
                    groups.skip(group);
                    continue;
                }
                let eta_text = format!("{elabel} ({eta})");
                let vtext = valid.map(|v| v.to_string()).unwrap_or_else(|| "named".into());
                gap_row(&mut table, case_label, &klabel, &eta_text, &vtext, &gap);
                groups.add(group, &gap);
            }
        }
    }
    let tol = ctx.thresholds.gap.unwrap_or(DEFAULT_GAP_TOLERANCE);
    Ok(Outcome {
        checks: groups.checks::<T>(tol),
        log: groups.scale_log::<T>(),
        data: json!({"groups": groups.summary()}),
        table: Some(table),
    })
}

fn random_general<T: Scalar>(rng: &mut lsmdual_core::rng::Rng, spec: &RandomRates, n: usize) -> GeneralLsmRates<T> {
    let mut r = GeneralLsmRates::<T>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for m in Mechanism::ALL {
                if m == Mechanism::Annihilation && j < i {
                    continue;
                }
                let v: T = random_ratio(rng, spec);
                if m == Mechanism::Annihilation {
                    r.set(m, j, i, v.clone());
                }
                r.set(m, i, j, v);
            }
        }
    }
    r
}

fn general<T: Scalar>(ctx: &Ctx, p: &ExactParams) -> Result<Outcome> {
    if p.eta.is_empty() {
        return Err(ctx.field("params.eta", "no duality parameters given"));
    }
    let mut subjects: Vec<(String, GeneralLsmRates<T>)> = Vec::new();
    for (i, c) in p.cases.iter().enumerate() {
        let field = format!("params.cases[{i}].model");
        let model = ctx.model(&field, Some(&c.model))?;
        let rates = model.lsm_rates::<T>()?.ok_or_else(|| ctx.field(&field, "needs constant rates"))?;
        for kspec in kernels_for(ctx, p, Some(c), "params.kernels")? {
            let q: Kernel<T> = ctx.kernel("params.kernels", kspec)?;
            subjects.push((format!("{}, {}", c.model, kernel_label(kspec)), GeneralLsmRates::from_constant(&rates, &q)));
        }
    }
    if let Some(spec) = &p.random {
        if spec.sites.is_empty() || spec.sites.iter().any(|&n| n < 2) {
            return Err(ctx.field("params.random.sites", "need lattice sizes of at least 2"));
        }
        let mut rng = ctx.seed()?.rng();
        for i in 0..spec.count {
            let n = spec.sites[i % spec.sites.len()];
            subjects.push((format!("random#{i}, {n} sites"), random_general(&mut rng, spec, n)));
        }
    }
    if subjects.is_empty() {
        return Err(ctx.field("params.cases", "no cases and no random block"));
    }
    let mut groups = Groups::default();
    let mut table = gap_table("cross_check");
    let mut mismatched = 0usize;
    let mut cross_checked = 0usize;
    for (label, rates) in &subjects {
        let n = rates.n_sites();
        for eta_spec in &p.eta {
            let elabel = num_label(eta_spec);
            let eta: T = ctx.number("params.eta", eta_spec)?;
            let rep = verify_dupar_general(rates, &eta, StateSpace::spin(n)?)?;
            cross_checked += 1;
            if !rep.dual.cross_check_agrees() {
                mismatched += 1;
            }
            let agrees = rep.dual.cross_check_agrees().to_string();
            gap_row(&mut table, label, &format!("{n} sites"), &elabel, &agrees, &rep.gap);
            let group = if label.starts_with("random#") { format!("{n} sites, eta={elabel}") } else { format!("{label}, eta={elabel}") };
            groups.add(group, &rep.gap);
        }
    }
    let tol = ctx.thresholds.gap.unwrap_or(DEFAULT_GAP_TOLERANCE);
    let mut checks = groups.checks::<T>(tol);
    checks.push(Check::le(format!("cross-check mismatches over {cross_checked} duals"), mismatched as f64, 0.0));
    Ok(Outcome { checks, log: groups.scale_log::<T>(), data: json!({"groups": groups.summary()}), table: Some(table) })
}

fn intertwining<T: Scalar>(ctx: &Ctx, p: &ExactParams) -> Result<Outcome> {
    if p.cases.is_empty() {
        return Err(ctx.field("params.cases", "intertwining checks need cases"));
    }
    let tol = ctx.thresholds.gap.unwrap_or(DEFAULT_GAP_TOLERANCE);
    let control = ctx.thresholds.control_gap.unwrap_or(DEFAULT_CONTROL_GAP);
    let mut checks = Vec::new();
    let mut table = gap_table("v");
    for (i, c) in p.cases.iter().enumerate() {
        let model = ctx.model(&format!("params.cases[{i}].model"), Some(&c.model))?;
        let dual = ctx.model(&format!("params.cases[{i}].dual"), c.dual.as_deref())?;
        let vfield = format!("params.cases[{i}].v");
        let v: T = ctx.number(&vfield, c.v.as_ref().ok_or_else(|| ctx.field(&vfield, "required"))?)?;
        let control_v: Option<T> =
            c.control_v.as_ref().map(|x| ctx.number(&format!("params.cases[{i}].control_v"), x)).transpose()?;
        let label = format!("{} ~ {}", c.model, c.dual.as_deref().unwrap_or_default());
        for kspec in kernels_for(ctx, p, Some(c), "params.kernels")? {
            let q: Kernel<T> = ctx.kernel("params.kernels", kspec)?;
            let klabel = kernel_label(kspec);
            let space = space_for(&model, &q, p.cap)?;
            let g2 = build_generator::<T>(&model, &q, space, false)?;
            let g1 = build_generator::<T>(&dual, &q, space, false)?;
            let gap = intertwining_gap(&g2, &g1, &v)?;
            gap_row(&mut table, &label, &klabel, "", &v.to_string(), &gap);
            let name = format!("intertwining[{label}, {klabel}, v={v}]");
            checks.push(if T::EXACT {
                Check::exact_zero(name, gap.max_abs_f64(), gap.exact_zero)
            } else {
                Check::le(name, gap.max_abs_f64(), tol)
            });
            if let Some(cv) = &control_v {
                let cgap = intertwining_gap(&g2, &g1, cv)?;
                gap_row(&mut table, &label, &klabel, "", &format!("{cv} (control)"), &cgap);
                checks.push(Check::gt(format!("control[{label}, {klabel}, v={cv}]"), cgap.max_abs_f64(), control));
            }
        }
    }
    Ok(Outcome { checks, log: Vec::new(), data: serde_json::Value::Null, table: Some(table) })
}

/// Every configuration on `n` sites with total at most `max_total`.
fn configurations(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut x = vec![0u32; n];
    fn rec(x: &mut Vec<u32>, i: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if i == x.len() {
            out.push(x.clone());
            return;
        }
        for k in 0..=left {
            x[i] = k;
            rec(x, i + 1, left - k, out);
        }
        x[i] = 0;
    }
    rec(&mut x, 0, max_total, &mut out);
    out
}

pub fn run_thinning(ctx: &Ctx, p: &ThinningParams) -> Result<Outcome> {
    match ctx.mode {
        Mode::Rational => thinning_in::<Rational>(ctx, p),
        Mode::Float => thinning_in::<f64>(ctx, p),
    }
}

fn thinning_in<T: Scalar>(ctx: &Ctx, p: &ThinningParams) -> Result<Outcome> {
    if p.max_sites == 0 || p.thetas.is_empty() || p.keeps.is_empty() {
        return Err(ctx.field("params", "need max_sites >= 1 and nonempty thetas and keeps"));
    }
    let thetas: Vec<T> = p.thetas.iter().map(|t| ctx.number("params.thetas", t)).collect::<Result<_>>()?;
    let keeps: Vec<T> = p.keeps.iter().map(|t| ctx.number("params.keeps", t)).collect::<Result<_>>()?;
    let tol = ctx.thresholds.tolerance.unwrap_or(DEFAULT_THINNING_TOLERANCE);
    let mut xs = Vec::new();
    for n in 1..=p.max_sites {
        xs.extend(configurations(n, p.max_total));
    }

    // generating function: relative error in float mode, equality in rational mode
    let (mut gen_worst, mut gen_exact, mut gen_cases) = (0.0f64, true, 0usize);
    let mut table = Table::new(["check", "theta", "keep", "keep2", "cases", "max_rel_or_abs_error", "exact"]);
    for th in &thetas {
        for k in &keeps {
            let (mut worst, mut exact) = (0.0f64, true);
            for x in &xs {
                let (lhs, rhs) = thin_generating_check(x, th, k)?;
                exact &= lhs == rhs;
                let diff = (lhs - rhs.clone()).abs().as_f64() / rhs.abs().as_f64().max(1.0);
                worst = worst.max(diff);
            }
            gen_cases += xs.len();
            gen_worst = gen_worst.max(worst);
            gen_exact &= exact;
            table.push(["generating".to_string(), th.to_string(), k.to_string(), String::new(), xs.len().to_string(), worst.to_string(), exact.to_string()]);
        }
    }
    let (mut comp_worst, mut comp_exact, mut comp_cases) = (0.0f64, true, 0usize);
    for u in &keeps {
        for v in &keeps {
            let (mut worst, mut exact) = (0.0f64, true);
            for x in &xs {
                let n = x.len();
                let rep = thin_composition_exact(x, &vec![u.clone(); n], &vec![v.clone(); n])?;
                exact &= rep.exact_match;
                worst = worst.max(rep.max_abs_difference);
            }
            comp_cases += xs.len();
            comp_worst = comp_worst.max(worst);
            comp_exact &= exact;
            table.push(["composition".to_string(), String::new(), u.to_string(), v.to_string(), xs.len().to_string(), worst.to_string(), exact.to_string()]);
        }
    }
    let checks = if T::EXACT {
        vec![
            Check::exact_zero(format!("generating function over {gen_cases} cases"), gen_worst, gen_exact),
            Check::exact_zero(format!("composition over {comp_cases} cases"), comp_worst, comp_exact),
        ]
    } else {
        vec![
            Check::le(format!("generating function relative error over {gen_cases} cases"), gen_worst, tol),
            Check::le(format!("composition error over {comp_cases} cases"), comp_worst, tol),
        ]
    };
    Ok(Outcome { checks, log: Vec::new(), data: json!({"configurations": xs.len()}), table: Some(table) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_counts() {
        // compositions of at most k into n parts: C(k + n, n)
        assert_eq!(configurations(1, 8).len(), 9);
        assert_eq!(configurations(2, 8).len(), 45);
        assert_eq!(configurations(3, 8).len(), 165);
        assert!(configurations(3, 8).iter().all(|x| x.iter().sum::<u32>() <= 8));
    }
}
