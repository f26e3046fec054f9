use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Spin,
    Count,
    UnitReal,
    NonnegReal,
}

/// Lattice state. Spin and count configurations share the `u32` encoding
/// used by the jump models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "values", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Config {
    Spin(Vec<u32>),
    Count(Vec<u32>),
    UnitReal(Vec<f64>),
    NonnegReal(Vec<f64>),
}

impl Config {
    pub fn spin(values: Vec<u32>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::Variant(format!("spin value {v} is not 0 or 1")));
        }
        Ok(Config::Spin(values))
    }

    pub fn count(values: Vec<u32>) -> Self {
        Config::Count(values)
    }

    pub fn unit_real(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Variant(format!("value {v} outside [0,1]")));
        }
        Ok(Config::UnitReal(values))
    }

    pub fn nonneg_real(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Variant(format!("value {v} outside [0,inf)")));
        }
        Ok(Config::NonnegReal(values))
    }

    pub fn zeros(variant: Variant, n: usize) -> Self {
        match variant {
            Variant::Spin => Config::Spin(vec![0; n]),
            Variant::Count => Config::Count(vec![0; n]),
            Variant::UnitReal => Config::UnitReal(vec![0.0; n]),
            Variant::NonnegReal => Config::NonnegReal(vec![0.0; n]),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Config::Spin(_) => Variant::Spin,
            Config::Count(_) => Variant::Count,
            Config::UnitReal(_) => Variant::UnitReal,
            Config::NonnegReal(_) => Variant::NonnegReal,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Config::Spin(v) | Config::Count(v) => v.len(),
            Config::UnitReal(v) | Config::NonnegReal(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn discrete(&self) -> Option<&[u32]> {
        match self {
            Config::Spin(v) | Config::Count(v) => Some(v),
            _ => None,
        }
    }

    pub fn real(&self) -> Option<&[f64]> {
        match self {
            Config::UnitReal(v) | Config::NonnegReal(v) => Some(v),
            _ => None,
        }
    }

    /// Rebuilds a configuration of the same variant from discrete values.
    pub fn with_discrete(&self, values: Vec<u32>) -> Self {
        match self {
            Config::Spin(_) => Config::Spin(values),
            _ => Config::Count(values),
        }
    }

    /// Values as `f64`, whatever the variant.
    pub fn as_f64_vec(&self) -> Vec<f64> {
        match self {
            Config::Spin(v) | Config::Count(v) => v.iter().map(|&x| x as f64).collect(),
            Config::UnitReal(v) | Config::NonnegReal(v) => v.clone(),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Config::Spin(v) => v.iter().all(|&x| x <= 1),
            Config::Count(_) => true,
            Config::UnitReal(v) => v.iter().all(|x| (0.0..=1.0).contains(x)),
            Config::NonnegReal(v) => v.iter().all(|x| *x >= 0.0 && x.is_finite()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_checks() {
        assert!(Config::spin(vec![0, 1, 1]).is_ok());
        assert!(Config::spin(vec![0, 2]).is_err());
        assert!(Config::unit_real(vec![0.2, 1.1]).is_err());
        assert!(Config::nonneg_real(vec![-0.1]).is_err());
        assert!(Config::nonneg_real(vec![f64::INFINITY]).is_err());
        assert_eq!(Config::zeros(Variant::Count, 3), Config::Count(vec![0, 0, 0]));
    }

    #[test]
    fn serializes_with_variant_tag() {
        let c = Config::spin(vec![1, 0]).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert!(text.contains("SPIN"));
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
