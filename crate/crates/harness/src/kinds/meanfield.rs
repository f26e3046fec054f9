//! MEANFIELD_CV and MEANFIELD_SRW.

use lsmdual_core::model::{Kernel, KernelSpec, NoiseConvention};
use lsmdual_core::stochastic::meanfield::REJECT_Z;
use lsmdual_core::stochastic::{
    generator_identity_oracle, meanfield_cv_experiment, meanfield_srw_experiment, MeanFieldCvConfig, MeanFieldSrwConfig,
    OracleFamily, OracleOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{kernel_label, Ctx, Outcome};
use crate::error::Result;
use crate::report::{Check, Table};

const DEFAULT_TOLERANCE: f64 = 1e-6;

fn single() -> KernelSpec {
    KernelSpec::Preset("single".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvParams {
    /// The limiting stepping stone model, e.g. `ssm:1,1,0`.
    pub model: String,
    #[serde(default = "single")]
    pub kernel: KernelSpec,
    pub x0: Vec<f64>,
    pub sizes: Vec<u32>,
    pub t: f64,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_factor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrwSpec {
    /// The limiting super random walk, e.g. `srw:1,0,1`; its noise
    /// convention is ignored since both are measured.
    pub model: String,
    pub z0: f64,
    pub sizes: Vec<u32>,
    pub horizon: f64,
    pub t: f64,
    pub n_samples: usize,
    pub dt: f64,
    /// Convention the measurement must select.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_convention: Option<NoiseConvention>,
    /// Check the selected convention against the self-duality constant
    /// located by the generator-identity oracle.
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "single")]
    pub oracle_kernel: KernelSpec,
}

pub fn run_cv(ctx: &Ctx, p: &CvParams) -> Result<Outcome> {
    let model = ctx.model("params.model", Some(&p.model))?;
    let ssm = model.ssm_params().map_err(|e| ctx.field("params.model", e.to_string()))?;
    let q: Kernel<f64> = ctx.kernel("params.kernel", &p.kernel)?;
    let mut cfg = MeanFieldCvConfig::new(ssm, p.x0.clone(), p.sizes.clone(), p.t, p.n_samples, ctx.seed()?);
    if let Some(dt) = p.dt {
        cfg.dt = dt;
    }
    if let Some(f) = p.reference_factor {
        cfg.reference_factor = f;
    }
    if let Some(b) = p.bootstrap {
        cfg.bootstrap = b;
    }
    if let Some(o) = p.observe {
        cfg.observe = o;
    }
    let rep = meanfield_cv_experiment(&q, &cfg)?;
    let mut checks = Vec::new();
    for w in rep.rows.windows(2) {
        let band = 2.0 * (w[0].ks_sigma.powi(2) + w[1].ks_sigma.powi(2)).sqrt();
        let margin = w[0].ks - w[1].ks - band;
        checks.push(Check::gt(format!("KS drop N={} -> N={} beyond 2 sigma", w[0].n, w[1].n), margin, 0.0));
    }
    let mut table = Table::new(["n", "ks", "ks_sigma", "mean", "reference_mean"]);
    for r in &rep.rows {
        table.push([r.n.to_string(), r.ks.to_string(), r.ks_sigma.to_string(), r.mean.to_string(), r.reference_mean.to_string()]);
    }
    Ok(Outcome { checks, log: Vec::new(), data: serde_json::to_value(&rep).unwrap(), table: Some(table) })
}

pub fn run_srw(ctx: &Ctx, p: &SrwSpec) -> Result<Outcome> {
    let model = ctx.model("params.model", Some(&p.model))?;
    let srw = model.srw_params().map_err(|e| ctx.field("params.model", e.to_string()))?;
    let cfg = MeanFieldSrwConfig {
        srw,
        z0: p.z0,
        sizes: p.sizes.clone(),
        horizon: p.horizon,
        t: p.t,
        n_samples: p.n_samples,
        dt: p.dt,
        seed: ctx.seed()?,
    };
    let rep = meanfield_srw_experiment(&cfg)?;
    let reject = ctx.thresholds.reject_z.unwrap_or(REJECT_Z);
    let mut checks = Vec::new();
    let mut log = Vec::new();
    checks.push(Check::holds("a noise convention is selected", Some(rep.selected.is_some())));
    if let Some(sel) = rep.selected {
        log.push(format!("selected noise convention {}", sel.name()));
        for r in &rep.rows {
            let (kept, other) = match sel {
                NoiseConvention::SqrtAlpha => (r.z_alpha, r.z_two_alpha),
                NoiseConvention::SqrtTwoAlpha => (r.z_two_alpha, r.z_alpha),
            };
            checks.push(Check::gt(format!("competitor |z| at N={}", r.n), other, reject));
            checks.push(Check::lt(format!("selected |z| at N={}", r.n), kept, reject));
        }
    }
    if let Some(want) = p.expect_convention {
        checks.push(Check::holds(format!("selected convention is {}", want.name()), Some(rep.selected == Some(want))));
    }
    let mut data = json!({"experiment": rep});
    if p.oracle {
        let tol = ctx.thresholds.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        let q: Kernel<f64> = ctx.kernel("params.oracle_kernel", &p.oracle_kernel)?;
        match rep.selected {
            Some(sel) => {
                let mut params = srw;
                params.noise = sel;
                let o = generator_identity_oracle(OracleFamily::SrwSelf(params), &q, &OracleOptions::default())?;
                let stated = params.gamma / params.alpha;
                let rel = (o.constant - stated).abs() / stated.abs();
                log.push(format!(
                    "oracle constant under {} on {}: {} (gamma/alpha = {stated})",
                    sel.name(),
                    kernel_label(&p.oracle_kernel),
                    o.constant
                ));
                log.extend(o.log.iter().cloned());
                checks.push(Check::le("oracle constant under selected convention vs gamma/alpha (relative)", rel, tol));
                data["oracle"] = serde_json::to_value(&o).unwrap();
            }
            None => checks.push(Check::holds("oracle constant under selected convention", Some(false))),
        }
    }
    let mut table = Table::new([
        "n", "initial_count", "z", "variance_rate", "variance_rate_se", "drift", "drift_se", "drift_predicted", "z_alpha",
        "z_two_alpha", "ks_alpha", "ks_two_alpha",
    ]);
    for r in &rep.rows {
        table.push([
            r.n.to_string(),
            r.initial_count.to_string(),
            r.z.to_string(),
            r.variance_rate.to_string(),
            r.variance_rate_se.to_string(),
            r.drift.to_string(),
            r.drift_se.to_string(),
            r.drift_predicted.to_string(),
            r.z_alpha.to_string(),
            r.z_two_alpha.to_string(),
            r.ks_alpha.to_string(),
            r.ks_two_alpha.to_string(),
        ]);
    }
    Ok(Outcome { checks, log, data, table: Some(table) })
}
