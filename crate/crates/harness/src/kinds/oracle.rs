//! ORACLE: locate a duality constant from the generator identity.

use lsmdual_core::model::{Kernel, KernelSpec, NumLit};
use lsmdual_core::stochastic::{generator_identity_oracle, OracleFamily, OracleOptions, OracleStatus};
use serde::{Deserialize, Serialize};

use super::{Ctx, Outcome};
use crate::error::Result;
use crate::report::{Check, Table};

const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FamilyName {
    SsmSelf,
    SrwSelf,
    SsmBps,
}

fn single() -> KernelSpec {
    KernelSpec::Preset("single".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleParams {
    pub family: FamilyName,
    /// `ssm:r,s,m` or `srw:alpha,beta,gamma[,one|two]`.
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default = "single")]
    pub kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_constant: Option<NumLit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
}

pub fn run(ctx: &Ctx, p: &OracleParams) -> Result<Outcome> {
    let model = ctx.model("params.model", Some(&p.model))?;
    let bad_model = |e: lsmdual_core::Error| ctx.field("params.model", e.to_string());
    let family = match p.family {
        FamilyName::SsmSelf => {
            let s = model.ssm_params().map_err(bad_model)?;
            OracleFamily::SsmSelf { r: s.r, s: s.s, m: s.m }
        }
        FamilyName::SrwSelf => OracleFamily::SrwSelf(model.srw_params().map_err(bad_model)?),
        FamilyName::SsmBps => {
            let s = model.ssm_params().map_err(bad_model)?;
            let eps = p.eps.ok_or_else(|| ctx.field("params.eps", "required for SSM_BPS"))?;
            OracleFamily::SsmBps { r: s.r, s: s.s, m: s.m, eps }
        }
    };
    let q: Kernel<f64> = ctx.kernel("params.kernel", &p.kernel)?;
    let mut opts = OracleOptions::default();
    if let Some(seed) = ctx.seed {
        opts.seed = seed;
    }
    if let Some(n) = p.n_points {
        opts.n_points = n;
    }
    let rep = generator_identity_oracle(family, &q, &opts)?;
    let tol = ctx.thresholds.residual.unwrap_or(DEFAULT_TOLERANCE);
    let mut checks = vec![
        Check::lt("oracle residual", rep.residual, tol),
        Check::holds(
            format!("oracle status ({})", serde_json::to_value(rep.status).unwrap().as_str().unwrap()),
            match rep.status {
                OracleStatus::Verified => Some(true),
                OracleStatus::NotVerified => Some(false),
                OracleStatus::Unresolved => None,
            },
        ),
    ];
    if let Some(want) = &p.expect_constant {
        let want: f64 = ctx.number("params.expect_constant", want)?;
        let ctol = ctx.thresholds.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        checks.push(Check::le(format!("|constant - {want}|"), (rep.constant - want).abs(), ctol));
    }
    let mut log = vec![format!(
        "{}: constant {} (residual {:e}); stated {} (residual {:e})",
        family.name(),
        rep.constant,
        rep.residual,
        rep.stated_constant,
        rep.stated_residual
    )];
    log.extend(rep.log.iter().cloned());
    let mut table = Table::new(["c", "worst_relative_residual"]);
    for (c, r) in &rep.curve {
        table.push([c.to_string(), r.to_string()]);
    }
    Ok(Outcome { checks, log, data: serde_json::to_value(&rep).unwrap(), table: Some(table) })
}
