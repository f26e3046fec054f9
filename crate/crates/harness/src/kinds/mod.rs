//! One runner per scenario kind.

pub mod exact;
pub mod mc;
pub mod meanfield;
pub mod oracle;
pub mod poisson;

use std::path::Path;

use lsmdual_core::exact::StateSpace;
use lsmdual_core::model::{Config, Kernel, KernelSpec, ModelSpec, NumLit, Variant};
use lsmdual_core::rng::Seed;
use lsmdual_core::Scalar;

use crate::error::{HarnessError, Result};
use crate::report::{Check, Table};
use crate::scenario::{Mode, Thresholds};

/// What a runner hands back; the caller adds verdicts and provenance.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub log: Vec<String>,
    pub data: serde_json::Value,
    pub table: Option<Table>,
}

pub struct Ctx<'a> {
    pub path: &'a Path,
    pub mode: Mode,
    pub seed: Option<Seed>,
    pub thresholds: &'a Thresholds,
}

impl Ctx<'_> {
    pub fn field(&self, field: &str, message: impl Into<String>) -> HarnessError {
        HarnessError::field(self.path, field, message)
    }

    pub fn seed(&self) -> Result<Seed> {
        self.seed.ok_or_else(|| self.field("seed", "required for this scenario"))
    }

    pub fn model(&self, field: &str, text: Option<&str>) -> Result<ModelSpec> {
        let text = text.ok_or_else(|| self.field(field, "required"))?;
        ModelSpec::from_shorthand(text).map_err(|e| self.field(field, e.to_string()))
    }

    pub fn kernel<T: Scalar>(&self, field: &str, spec: &KernelSpec) -> Result<Kernel<T>> {
        spec.build::<T>().map_err(|e| self.field(field, e.to_string()))
    }

    pub fn number<T: Scalar>(&self, field: &str, v: &NumLit) -> Result<T> {
        v.value::<T>().map_err(|e| self.field(field, e.to_string()))
    }
}

pub fn kernel_label(spec: &KernelSpec) -> String {
    match spec {
        KernelSpec::Preset(name) => name.clone(),
        KernelSpec::Pairs { n_sites, raw, .. } => format!("{}pairs:{n_sites}", if *raw { "raw-" } else { "" }),
    }
}

pub fn num_label(v: &NumLit) -> String {
    match v {
        NumLit::Int(n) => n.to_string(),
        NumLit::Float(x) => x.to_string(),
        NumLit::Text(s) => s.clone(),
    }
}

/// The state space a jump model lives on over `q`: all spin configurations,
/// or counts up to `cap`.
pub fn space_for<T: Scalar>(model: &ModelSpec, q: &Kernel<T>, cap: u32) -> lsmdual_core::Result<StateSpace> {
    match model.local_generator::<T>(q, false)?.variant() {
        Variant::Spin => StateSpace::spin(q.n_sites()),
        _ => StateSpace::count(q.n_sites(), cap),
    }
}

/// Integer configuration of the right variant for `model`.
pub fn discrete_config(ctx: &Ctx, field: &str, model: &ModelSpec, q: &Kernel<f64>, values: &[f64]) -> Result<Config> {
    let ints = values
        .iter()
        .map(|&v| if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 { Ok(v as u32) } else { Err(()) })
        .collect::<std::result::Result<Vec<u32>, ()>>()
        .map_err(|_| ctx.field(field, "expected nonnegative integers"))?;
    if ints.len() != q.n_sites() {
        return Err(ctx.field(field, format!("expected {} sites, got {}", q.n_sites(), ints.len())));
    }
    let variant = model.local_generator::<f64>(q, true)?.variant();
    match variant {
        Variant::Spin => Config::spin(ints).map_err(|e| ctx.field(field, e.to_string())),
        _ => Ok(Config::count(ints)),
    }
}
