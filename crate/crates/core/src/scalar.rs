//! Numeric tower shared by the rate algebra and the exact engine.
//!
//! Every rate computation is generic over [`Scalar`], which is implemented for
//! `f64` (float mode) and [`Rational`] (exact mode). Simulation code uses `f64`
//! only.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational used in exact mode.
pub type Rational = BigRational;

/// Field operations needed by the rate algebra and the generator matrices.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + num_traits::Num
    + Signed
{
    /// True for arbitrary-precision arithmetic.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Converts a float without rounding surprises: in exact mode the shortest
    /// decimal representation of `x` is parsed as an exact rational, so `0.1`
    /// becomes `1/10`.
    fn promote(x: f64) -> Self;

    fn as_f64(&self) -> f64;

    /// The exact value, for exact types.
    fn to_rational(&self) -> Option<Rational> {
        None
    }

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }

    /// Strictly above zero. Unlike `Signed::is_positive`, `0.0` is not
    /// positive and `-0.0` is not negative.
    fn gt_zero(&self) -> bool {
        *self > Self::zero()
    }

    fn lt_zero(&self) -> bool {
        *self < Self::zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn promote(x: f64) -> Self {
        x
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn powi(&self, k: u32) -> Self {
        f64::powi(*self, k as i32)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn promote(x: f64) -> Self {
        parse_decimal(&format!("{x}")).expect("finite float has a decimal representation")
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn powi(&self, k: u32) -> Self {
        num_traits::pow(self.clone(), k as usize)
    }
}

/// Parses `"3"`, `"-0.125"`, `"1e-3"`, or `"2/7"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(n / d);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("not a decimal number: `{s}`"));
    let s = s.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// Parses a number literal in the scalar type of the caller.
pub fn parse_scalar<T: Scalar>(s: &str) -> Result<T> {
    Ok(T::from_rational(&parse_rational(s)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.1").unwrap(), Rational::from_ratio(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), Rational::from_ratio(-5, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), Rational::from_ratio(1, 1000));
        assert_eq!(parse_rational("3/6").unwrap(), Rational::from_ratio(1, 2));
        assert_eq!(parse_rational(".5").unwrap(), Rational::from_ratio(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn float_promotion_uses_shortest_decimal() {
        assert_eq!(Rational::promote(0.1), Rational::from_ratio(1, 10));
        assert_eq!(Rational::promote(1.0 / 3.0).as_f64(), 1.0 / 3.0);
    }

    #[test]
    fn float_zero_has_no_sign() {
        assert!(!0.0f64.gt_zero());
        assert!(!(-0.0f64).lt_zero());
        assert!(1e-300f64.gt_zero());
        assert!(!Rational::from_int(0).gt_zero());
    }

    #[test]
    fn powers() {
        let h = Rational::from_ratio(-1, 2);
        assert_eq!(h.powi(3), Rational::from_ratio(-1, 8));
        assert_eq!(h.powi(0), Rational::one());
        assert_eq!(Scalar::powi(&0.0f64, 0), 1.0);
    }
}
