//! POISSON_CHECK: Poissonization of the stepping stone model into its
//! branching dual, and thinning between branching duals.

use lsmdual_core::model::{Kernel, KernelSpec};
use lsmdual_core::stochastic::{bps_thinning_check, poissonization_check, MomentComparison, PoissonCheckConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Ctx, Outcome};
use crate::error::Result;
use crate::report::{Check, Table};

const DEFAULT_Z: f64 = 3.0;
const DEFAULT_REJECT_Z: f64 = 5.0;
const MOMENTS: [&str; 3] = ["mean", "second moment", "zero probability"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonKind {
    Poissonization,
    Thinning,
}

fn single() -> KernelSpec {
    KernelSpec::Preset("single".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonParams {
    pub check: PoissonKind,
    /// `ssm:r,s,m`.
    pub model: String,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_prime: Option<f64>,
    #[serde(default = "single")]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub x0: Vec<f64>,
    #[serde(default)]
    pub y0: Vec<u32>,
    pub t: f64,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

fn moment_rows(table: &mut Table, label: &str, weight: f64, m: &MomentComparison) {
    for (name, pair) in MOMENTS.iter().zip([m.mean, m.second, m.zero]) {
        table.push([
            label.to_string(),
            weight.to_string(),
            name.to_string(),
            pair.lhs_mean.to_string(),
            pair.lhs_stderr.to_string(),
            pair.rhs_mean.to_string(),
            pair.rhs_stderr.to_string(),
            pair.z_score.to_string(),
        ]);
    }
}

pub fn run(ctx: &Ctx, p: &PoissonParams) -> Result<Outcome> {
    let model = ctx.model("params.model", Some(&p.model))?;
    let ssm = model.ssm_params().map_err(|e| ctx.field("params.model", e.to_string()))?;
    let q: Kernel<f64> = ctx.kernel("params.kernel", &p.kernel)?;
    let seed = ctx.seed()?;
    let z_max = ctx.thresholds.z.unwrap_or(DEFAULT_Z);
    let mut table = Table::new(["side", "weight", "moment", "lhs_mean", "lhs_stderr", "rhs_mean", "rhs_stderr", "z"]);
    let mut checks = Vec::new();
    let mut log = Vec::new();
    let data = match p.check {
        PoissonKind::Poissonization => {
            let dt = p.dt.ok_or_else(|| ctx.field("params.dt", "required"))?;
            let cfg = PoissonCheckConfig { x0: p.x0.clone(), t: p.t, n_samples: p.n_samples, dt, seed };
            let rep = poissonization_check(&ssm, p.eps, &q, &cfg)?;
            for (name, z) in MOMENTS.iter().zip(rep.oracle.comparison.z_scores()) {
                checks.push(Check::lt(format!("|z| {name}, oracle weight {}", rep.oracle.weight), z, z_max));
            }
            let reject = ctx.thresholds.reject_z.unwrap_or(DEFAULT_REJECT_Z);
            checks.push(Check::gt(format!("max |z|, stated weight {}", rep.stated.weight), rep.stated.comparison.max_z(), reject));
            log.push(format!(
                "weight from the located constant {} is {}; the stated weight is {}",
                rep.weights.constant, rep.weights.weight, rep.weights.stated
            ));
            moment_rows(&mut table, "oracle", rep.oracle.weight, &rep.oracle.comparison);
            moment_rows(&mut table, "stated", rep.stated.weight, &rep.stated.comparison);
            serde_json::to_value(&rep).unwrap()
        }
        PoissonKind::Thinning => {
            let eps_prime = p.eps_prime.ok_or_else(|| ctx.field("params.eps_prime", "required for thinning"))?;
            let rep = bps_thinning_check(&ssm, p.eps, eps_prime, &q, &p.y0, p.t, p.n_samples, seed)?;
            for (name, z) in MOMENTS.iter().zip(rep.z_scores()) {
                checks.push(Check::lt(format!("|z| {name}"), z, z_max));
            }
            let v = (1.0 + p.eps) / (1.0 + eps_prime);
            moment_rows(&mut table, "thinned", v, &rep);
            json!({"v": v, "comparison": rep})
        }
    };
    Ok(Outcome { checks, log, data, table: Some(table) })
}
