//! Serializable model descriptions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::jumps::{BpsProcess, CvpProcess, LocalGenerator, LsmProcess, RwProcess};
use crate::model::kernel::{Kernel, KernelSpec};
use crate::model::mapping::{cvp_as_lsm, rw_as_lsm};
use crate::model::rates::{
    BpsParams, CvpParams, GeneralLsmRates, LsmRates, Mechanism, NoiseConvention, RwParams, SrwParams,
    SsmParams,
};
use crate::scalar::{parse_rational, Rational, Scalar};

/// A number as written in a model or scenario file: an integer, a float, or
/// a string such as `"1/3"`. Converted exactly in rational mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumLit {
    Int(i64),
    Float(f64),
    Text(String),
}

impl NumLit {
    pub fn rational(&self) -> Result<Rational> {
        match self {
            NumLit::Int(n) => Ok(Rational::from_int(*n)),
            NumLit::Float(x) if x.is_finite() => Ok(Rational::promote(*x)),
            NumLit::Float(x) => Err(Error::Parse(format!("non-finite number {x}"))),
            NumLit::Text(s) => parse_rational(s),
        }
    }

    pub fn value<T: Scalar>(&self) -> Result<T> {
        match self {
            NumLit::Float(x) if !T::EXACT => Ok(T::promote(*x)),
            _ => Ok(T::from_rational(&self.rational()?)),
        }
    }

    pub fn f64(&self) -> Result<f64> {
        self.value::<f64>()
    }
}

impl From<f64> for NumLit {
    fn from(x: f64) -> Self {
        NumLit::Float(x)
    }
}

impl From<i64> for NumLit {
    fn from(x: i64) -> Self {
        NumLit::Int(x)
    }
}

impl From<&str> for NumLit {
    fn from(s: &str) -> Self {
        NumLit::Text(s.to_string())
    }
}

fn default_noise() -> NoiseConvention {
    NoiseConvention::SqrtAlpha
}

/// Tagged union over the model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Lsm { a: NumLit, b: NumLit, c: NumLit, d: NumLit, e: NumLit },
    /// Site-pair dependent rates given as `n x n` matrices (diagonal ignored).
    GeneralLsm {
        a: Vec<Vec<NumLit>>,
        b: Vec<Vec<NumLit>>,
        c: Vec<Vec<NumLit>>,
        d: Vec<Vec<NumLit>>,
        e: Vec<Vec<NumLit>>,
    },
    Cvp { r: NumLit, s: NumLit, m: NumLit },
    Rw { eps: NumLit, rho: NumLit, beta: NumLit, delta: NumLit },
    Bps { a: NumLit, b: NumLit, c: NumLit, d: NumLit },
    Ssm { r: NumLit, s: NumLit, m: NumLit },
    Srw {
        alpha: NumLit,
        beta: NumLit,
        gamma: NumLit,
        #[serde(default = "default_noise")]
        noise: NoiseConvention,
    },
}

/// A model together with its motion kernel, as stored in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub model: ModelSpec,
    pub kernel: KernelSpec,
}

impl ModelSpec {
    pub fn lsm(r: &LsmRates<f64>) -> Self {
        ModelSpec::Lsm { a: r.a.into(), b: r.b.into(), c: r.c.into(), d: r.d.into(), e: r.e.into() }
    }

    pub fn cvp(r: f64, s: f64, m: f64) -> Self {
        ModelSpec::Cvp { r: r.into(), s: s.into(), m: m.into() }
    }

    pub fn rw(eps: f64, rho: f64, beta: f64, delta: f64) -> Self {
        ModelSpec::Rw { eps: eps.into(), rho: rho.into(), beta: beta.into(), delta: delta.into() }
    }

    pub fn bps(a: f64, b: f64, c: f64, d: f64) -> Self {
        ModelSpec::Bps { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Lsm { .. } => "lsm",
            ModelSpec::GeneralLsm { .. } => "general_lsm",
            ModelSpec::Cvp { .. } => "cvp",
            ModelSpec::Rw { .. } => "rw",
            ModelSpec::Bps { .. } => "bps",
            ModelSpec::Ssm { .. } => "ssm",
            ModelSpec::Srw { .. } => "srw",
        }
    }

    pub fn is_jump_model(&self) -> bool {
        !matches!(self, ModelSpec::Ssm { .. } | ModelSpec::Srw { .. })
    }

    /// Lloyd-Sudbury rates (not validated for sign) for the families that
    /// have constant ones.
    pub fn lsm_rates<T: Scalar>(&self) -> Result<Option<LsmRates<T>>> {
        Ok(match self {
            ModelSpec::Lsm { a, b, c, d, e } => {
                Some(LsmRates::formal(a.value()?, b.value()?, c.value()?, d.value()?, e.value()?))
            }
            ModelSpec::Cvp { .. } => Some(cvp_as_lsm(&self.cvp_params()?)),
            ModelSpec::Rw { .. } => Some(rw_as_lsm(&self.rw_params()?)),
            _ => None,
        })
    }

    pub fn cvp_params<T: Scalar>(&self) -> Result<CvpParams<T>> {
        match self {
            ModelSpec::Cvp { r, s, m } => CvpParams::new(r.value()?, s.value()?, m.value()?),
            _ => Err(Error::Param(format!("{} is not a cvp model", self.family()))),
        }
    }

    pub fn rw_params<T: Scalar>(&self) -> Result<RwParams<T>> {
        match self {
            ModelSpec::Rw { eps, rho, beta, delta } => {
                RwParams::new(eps.value()?, rho.value()?, beta.value()?, delta.value()?)
            }
            _ => Err(Error::Param(format!("{} is not an rw model", self.family()))),
        }
    }

    pub fn bps_params<T: Scalar>(&self) -> Result<BpsParams<T>> {
        match self {
            ModelSpec::Bps { a, b, c, d } => BpsParams::new(a.value()?, b.value()?, c.value()?, d.value()?),
            _ => Err(Error::Param(format!("{} is not a bps model", self.family()))),
        }
    }

    pub fn ssm_params(&self) -> Result<SsmParams> {
        match self {
            ModelSpec::Ssm { r, s, m } => SsmParams::new(r.f64()?, s.f64()?, m.f64()?),
            _ => Err(Error::Param(format!("{} is not an ssm model", self.family()))),
        }
    }

    pub fn srw_params(&self) -> Result<SrwParams> {
        match self {
            ModelSpec::Srw { alpha, beta, gamma, noise } => {
                SrwParams::new(alpha.f64()?, beta.f64()?, gamma.f64()?, *noise)
            }
            _ => Err(Error::Param(format!("{} is not an srw model", self.family()))),
        }
    }

    pub fn general_lsm_rates<T: Scalar>(&self, n_sites: usize) -> Result<GeneralLsmRates<T>> {
        let ModelSpec::GeneralLsm { a, b, c, d, e } = self else {
            return Err(Error::Param(format!("{} is not a general_lsm model", self.family())));
        };
        let mut g = GeneralLsmRates::zeros(n_sites);
        for (m, mat) in Mechanism::ALL.into_iter().zip([a, b, c, d, e]) {
            if mat.len() != n_sites || mat.iter().any(|row| row.len() != n_sites) {
                return Err(Error::SiteMismatch { expected: n_sites, got: mat.len() });
            }
            for (i, row) in mat.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if i != j {
                        g.set(m, i, j, v.value()?);
                    }
                }
            }
        }
        Ok(g)
    }

    /// Site-local generator of a jump model. In process mode negative rates
    /// are rejected; formal mode admits them (generator matrices only).
    pub fn local_generator<T: Scalar>(
        &self,
        q: &Kernel<T>,
        process: bool,
    ) -> Result<Box<dyn LocalGenerator<T>>> {
        Ok(match self {
            ModelSpec::Lsm { .. } => {
                let rates = self.lsm_rates::<T>()?.expect("lsm has constant rates");
                if process {
                    rates.check_nonnegative()?;
                }
                Box::new(LsmProcess::constant(&rates, q)?)
            }
            ModelSpec::GeneralLsm { .. } => {
                let g = self.general_lsm_rates::<T>(q.n_sites())?;
                g.validate(process)?;
                Box::new(LsmProcess::new(g)?)
            }
            ModelSpec::Cvp { .. } => Box::new(CvpProcess::new(self.cvp_params()?, q.clone())),
            ModelSpec::Rw { .. } => Box::new(RwProcess::new(self.rw_params()?, q.clone())),
            ModelSpec::Bps { .. } => Box::new(BpsProcess::new(self.bps_params()?, q.clone())),
            ModelSpec::Ssm { .. } | ModelSpec::Srw { .. } => {
                return Err(Error::Variant(format!("{} is a diffusion, not a jump model", self.family())))
            }
        })
    }

    /// Parses compact forms such as `lsm:0,1,0,1,0`, `cvp:1,3,2`,
    /// `rw:1,5/2,3/2,1/2`, `bps:0,1,1,0`, `ssm:1,1,0`, `srw:1,0,1[,two]`.
    pub fn from_shorthand(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("model `{text}`: {msg}"));
        let (family, rest) = text.split_once(':').ok_or_else(|| bad("expected family:params"))?;
        let mut fields: Vec<&str> = rest.split(',').map(str::trim).collect();
        let mut noise = NoiseConvention::SqrtAlpha;
        if family == "srw" && fields.len() == 4 {
            noise = match fields.pop().unwrap() {
                "one" | "SQRT_ALPHA" => NoiseConvention::SqrtAlpha,
                "two" | "SQRT_TWO_ALPHA" => NoiseConvention::SqrtTwoAlpha,
                other => return Err(bad(&format!("unknown noise convention `{other}`"))),
            };
        }
        let nums: Vec<NumLit> = fields.iter().map(|f| NumLit::Text(f.to_string())).collect();
        for n in &nums {
            n.rational()?;
        }
        let want = |k: usize| if nums.len() == k { Ok(()) } else { Err(bad(&format!("expected {k} numbers"))) };
        let n = |i: usize| nums[i].clone();
        Ok(match family {
            "lsm" => {
                want(5)?;
                ModelSpec::Lsm { a: n(0), b: n(1), c: n(2), d: n(3), e: n(4) }
            }
            "cvp" => {
                want(3)?;
                ModelSpec::Cvp { r: n(0), s: n(1), m: n(2) }
            }
            "rw" => {
                want(4)?;
                ModelSpec::Rw { eps: n(0), rho: n(1), beta: n(2), delta: n(3) }
            }
            "bps" => {
                want(4)?;
                ModelSpec::Bps { a: n(0), b: n(1), c: n(2), d: n(3) }
            }
            "ssm" => {
                want(3)?;
                ModelSpec::Ssm { r: n(0), s: n(1), m: n(2) }
            }
            "srw" => {
                want(3)?;
                ModelSpec::Srw { alpha: n(0), beta: n(1), gamma: n(2), noise }
            }
            other => return Err(bad(&format!("unknown family `{other}`"))),
        })
    }
}
