//! Scenario files: TOML documents with a fixed header and a kind-specific
//! `[params]` table.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::kinds::exact::{ExactParams, ThinningParams};
use crate::kinds::mc::McParams;
use crate::kinds::meanfield::{CvParams, SrwSpec};
use crate::kinds::oracle::OracleParams;
use crate::kinds::poisson::PoissonParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kind {
    VerifyExact,
    VerifyMc,
    ThinningExact,
    MeanfieldCv,
    MeanfieldSrw,
    Oracle,
    PoissonCheck,
}

impl Kind {
    /// Kinds whose results depend on random samples and so need a seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Kind::VerifyMc | Kind::MeanfieldCv | Kind::MeanfieldSrw | Kind::PoissonCheck)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::VerifyExact => "VERIFY_EXACT",
            Kind::VerifyMc => "VERIFY_MC",
            Kind::ThinningExact => "THINNING_EXACT",
            Kind::MeanfieldCv => "MEANFIELD_CV",
            Kind::MeanfieldSrw => "MEANFIELD_SRW",
            Kind::Oracle => "ORACLE",
            Kind::PoissonCheck => "POISSON_CHECK",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Rational,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rational => "rational",
            Mode::Float => "float",
        })
    }
}

/// `fail` marks a scenario that is expected to break the identity it checks;
/// its verdict is inverted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    #[default]
    Pass,
    Fail,
}

/// Overrides for the per-kind defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Float-mode tolerance on gap entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// A control gap must exceed this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_gap: Option<f64>,
    /// Acceptance bound on `|z|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Rejection bound on `|z|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reject_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Exact(ExactParams),
    Thinning(ThinningParams),
    Mc(McParams),
    MeanfieldCv(CvParams),
    MeanfieldSrw(SrwSpec),
    Oracle(OracleParams),
    Poisson(PoissonParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub expect: Expect,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub thresholds: Thresholds,
    pub params: Params,
    #[serde(skip)]
    pub path: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    name: Option<String>,
    kind: Kind,
    #[serde(default)]
    mode: Mode,
    seed: Option<u64>,
    #[serde(default)]
    expect: Expect,
    description: Option<String>,
    #[serde(default)]
    thresholds: Thresholds,
    #[allow(dead_code)]
    params: toml::Table,
}

#[derive(Deserialize)]
struct WithParams<P> {
    params: P,
}

fn parse_error(path: &Path, e: toml::de::Error) -> HarnessError {
    HarnessError::Parse { path: path.to_path_buf(), message: e.to_string().trim_end().to_string() }
}

/// Re-reads the whole document so that errors inside `[params]` keep their
/// line numbers.
fn params<P: DeserializeOwned>(text: &str, path: &Path) -> Result<P> {
    toml::from_str::<WithParams<P>>(text).map(|w| w.params).map_err(|e| parse_error(path, e))
}

impl Scenario {
    pub fn parse(text: &str, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let header: Header = toml::from_str(text).map_err(|e| parse_error(path, e))?;
        let params = match header.kind {
            Kind::VerifyExact => Params::Exact(params(text, path)?),
            Kind::ThinningExact => Params::Thinning(params(text, path)?),
            Kind::VerifyMc => Params::Mc(params(text, path)?),
            Kind::MeanfieldCv => Params::MeanfieldCv(params(text, path)?),
            Kind::MeanfieldSrw => Params::MeanfieldSrw(params(text, path)?),
            Kind::Oracle => Params::Oracle(params(text, path)?),
            Kind::PoissonCheck => Params::Poisson(params(text, path)?),
        };
        let name = match header.name {
            Some(n) if n.trim().is_empty() => return Err(HarnessError::field(path, "name", "must not be empty")),
            Some(n) => n,
            None => path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string(),
        };
        let needs_seed = header.kind.is_stochastic() || matches!(&params, Params::Exact(p) if p.random.is_some());
        if needs_seed && header.seed.is_none() {
            let why = if header.kind.is_stochastic() {
                format!("required for {} scenarios", header.kind)
            } else {
                "required when `params.random` is set".to_string()
            };
            return Err(HarnessError::field(path, "seed", why));
        }
        Ok(Scenario {
            name,
            kind: header.kind,
            mode: header.mode,
            seed: header.seed,
            expect: header.expect,
            description: header.description,
            thresholds: header.thresholds,
            params,
            path: path.to_path_buf(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, path)
    }
}
