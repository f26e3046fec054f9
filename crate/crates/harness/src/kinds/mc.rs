//! VERIFY_MC: Monte Carlo duality functionals and time-t laws.

use lsmdual_core::exact::StateSpace;
use lsmdual_core::model::{Config, Kernel, KernelSpec, NumLit, Variant};
use lsmdual_core::stochastic::{estimate_duality_functional, estimate_ssm_bps_functional, exact_duality_functional, law_comparison};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{discrete_config, kernel_label, Ctx, Outcome};
use crate::error::Result;
use crate::report::{Check, Table};

const DEFAULT_Z: f64 = 3.0;
const DEFAULT_KS: f64 = 0.015;
const DEFAULT_CAP: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McCheck {
    /// `E psi(X_t, y0)` against `E psi(x0, Y_t)` for two jump models.
    Functional,
    /// Empirical time-t law against the uniformized law.
    Law,
    /// Stepping stone model against its branching dual.
    SsmBps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McCase {
    pub kernel: KernelSpec,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub y0: Vec<f64>,
    /// Overrides `params.model`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Per-site cap for count spaces in law checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McParams {
    pub check: McCheck,
    pub t: f64,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<NumLit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Also compare each side with the uniformized value.
    #[serde(default)]
    pub exact: bool,
    pub cases: Vec<McCase>,
}

pub fn run(ctx: &Ctx, p: &McParams) -> Result<Outcome> {
    if p.cases.is_empty() {
        return Err(ctx.field("params.cases", "at least one case is required"));
    }
    if !(p.t >= 0.0) || p.n_samples < 2 {
        return Err(ctx.field("params", "need t >= 0 and n_samples >= 2"));
    }
    let seed = ctx.seed()?;
    let z_max = ctx.thresholds.z.unwrap_or(DEFAULT_Z);
    let mut checks = Vec::new();
    let mut data = Vec::new();
    let mut table = match p.check {
        McCheck::Law => Table::new(["case", "model", "kernel", "state", "empirical", "exact"]),
        _ => Table::new(["case", "kernel", "lhs_mean", "lhs_stderr", "rhs_mean", "rhs_stderr", "z", "exact"]),
    };
    for (i, c) in p.cases.iter().enumerate() {
        let field = |f: &str| format!("params.cases[{i}].{f}");
        let q: Kernel<f64> = ctx.kernel(&field("kernel"), &c.kernel)?;
        let klabel = kernel_label(&c.kernel);
        let case_seed = seed.child(i as u64);
        let model_text = c.model.as_deref().or(p.model.as_deref());
        match p.check {
            McCheck::Functional => {
                let model = ctx.model("params.model", model_text)?;
                let dual = ctx.model("params.dual", p.dual.as_deref())?;
                let eta: f64 = ctx.number("params.eta", p.eta.as_ref().ok_or_else(|| ctx.field("params.eta", "required"))?)?;
                let x0 = discrete_config(ctx, &field("x0"), &model, &q, &c.x0)?;
                let y0 = discrete_config(ctx, &field("y0"), &dual, &q, &c.y0)?;
                let est = estimate_duality_functional(&model, &dual, &q, &x0, &y0, eta, p.t, p.n_samples, case_seed)?;
                let pair = est.pair;
                checks.push(Check::lt(format!("|z| functional[{klabel}]"), pair.z_score, z_max));
                let mut exact_value = None;
                if p.exact {
                    let v = exact_duality_functional(&model, &q, x0.discrete().unwrap(), y0.discrete().unwrap(), eta, p.t)?;
                    let (zl, zr) = pair.side_z_scores(v);
                    checks.push(Check::lt(format!("|z| forward side vs exact[{klabel}]"), zl, z_max));
                    checks.push(Check::lt(format!("|z| dual side vs exact[{klabel}]"), zr, z_max));
                    exact_value = Some(v);
                }
                table.push([
                    i.to_string(),
                    klabel.clone(),
                    pair.lhs_mean.to_string(),
                    pair.lhs_stderr.to_string(),
                    pair.rhs_mean.to_string(),
                    pair.rhs_stderr.to_string(),
                    pair.z_score.to_string(),
                    exact_value.map(|v| v.to_string()).unwrap_or_default(),
                ]);
                data.push(json!({"kernel": klabel, "estimate": est, "exact": exact_value}));
            }
            McCheck::Law => {
                let model = ctx.model("params.model", model_text)?;
                let x0 = discrete_config(ctx, &field("x0"), &model, &q, &c.x0)?;
                let space = match x0.variant() {
                    Variant::Spin => StateSpace::spin(q.n_sites())?,
                    _ => StateSpace::count(q.n_sites(), c.cap.unwrap_or(DEFAULT_CAP))?,
                };
                let cmp = law_comparison(&model, &q, space, x0.discrete().unwrap(), p.t, p.n_samples, case_seed)?;
                let mlabel = model_text.unwrap_or_default();
                checks.push(Check::lt(format!("KS[{mlabel}, {klabel}]"), cmp.ks, ctx.thresholds.ks.unwrap_or(DEFAULT_KS)));
                checks.push(Check::le(format!("escaped samples[{mlabel}, {klabel}]"), cmp.escaped as f64, 0.0));
                for (k, (e, x)) in cmp.empirical.iter().zip(&cmp.exact).enumerate() {
                    table.push([i.to_string(), mlabel.to_string(), klabel.clone(), format!("{:?}", space.config(k)), e.to_string(), x.to_string()]);
                }
                data.push(json!({"model": mlabel, "kernel": klabel, "ks": cmp.ks, "escaped": cmp.escaped, "states": space.size()}));
            }
            McCheck::SsmBps => {
                let model = ctx.model("params.model", model_text)?;
                let ssm = model.ssm_params().map_err(|e| ctx.field("params.model", e.to_string()))?;
                let eps = p.eps.ok_or_else(|| ctx.field("params.eps", "required"))?;
                let dt = p.dt.ok_or_else(|| ctx.field("params.dt", "required"))?;
                Config::unit_real(c.x0.clone()).map_err(|e| ctx.field(&field("x0"), e.to_string()))?;
                let y0 = Config::count(to_counts(ctx, &field("y0"), &c.y0)?);
                let pair = estimate_ssm_bps_functional(&ssm, eps, &q, &c.x0, y0.discrete().unwrap(), p.t, dt, p.n_samples, case_seed)?;
                checks.push(Check::lt(format!("|z| ssm-bps functional[{klabel}]"), pair.z_score, z_max));
                table.push([
                    i.to_string(),
                    klabel.clone(),
                    pair.lhs_mean.to_string(),
                    pair.lhs_stderr.to_string(),
                    pair.rhs_mean.to_string(),
                    pair.rhs_stderr.to_string(),
                    pair.z_score.to_string(),
                    String::new(),
                ]);
                data.push(json!({"kernel": klabel, "estimate": pair}));
            }
        }
    }
    Ok(Outcome { checks, log: Vec::new(), data: json!({"cases": data}), table: Some(table) })
}

fn to_counts(ctx: &Ctx, field: &str, v: &[f64]) -> Result<Vec<u32>> {
    v.iter()
        .map(|&x| if x >= 0.0 && x.fract() == 0.0 { Ok(x as u32) } else { Err(ctx.field(field, "expected nonnegative integers")) })
        .collect()
}
