//! Scalar abstraction shared by the engine, the simplex solver and the
//! distribution types.
//!
//! Exact work (everything that produces a certified number) runs on
//! [`Rational`]; the randomized oracle and sampling helpers run the same code
//! paths on `f64`.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Numeric type the generic core is parameterized over.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Converts an exact rational into this scalar (rounding if inexact).
    fn from_rational(r: &Rational) -> Self;

    /// Lossy conversion used for reporting and sampling.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Zero test; exact for rationals, within a small absolute tolerance for
    /// floating point.
    fn is_negligible(&self) -> bool;

    /// Equality test with the same tolerance rules as [`Scalar::is_negligible`].
    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_negligible()
    }

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer conversion")
    }

    /// Rendering used in JSON output: `p/q` for rationals, shortest
    /// round-trip decimal for floats.
    fn to_json_string(&self) -> String {
        self.to_string()
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64_lossy(&self) -> f64 {
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                // numerator/denominator too large for f64: scale down first
                let bits = self.denom().bits().max(self.numer().bits()) as i64 - 900;
                let shift = bits.max(0) as usize;
                let n = (self.numer() >> shift).to_f64().unwrap_or(0.0);
                let d = (self.denom() >> shift).to_f64().unwrap_or(1.0);
                n / d
            }
        }
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn to_json_string(&self) -> String {
        format_ratio(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        r.to_f64_lossy()
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-12
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        r.to_f64_lossy() as f32
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-6
    }
}

/// Builds `n/d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Renders a rational as `p/q`, always with an explicit denominator.
pub fn format_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Human rendering: `2/5 (0.4)`, integers without a denominator.
pub fn format_human(r: &Rational) -> String {
    let exact = if r.is_integer() { r.numer().to_string() } else { format_ratio(r) };
    format!("{exact} ({})", format_sig6(r.to_f64_lossy()))
}

/// Six significant digits, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct RationalParseError(pub String);

/// Parses `p/q`, an integer, or a decimal literal (`0.95` becomes `19/20`).
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| err())? };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Least common multiple of the denominators.
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, r| num_integer::lcm(acc, r.denom().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(parse_rational("0.4").unwrap(), ratio(2, 5));
        assert_eq!(parse_rational("0.95").unwrap(), ratio(19, 20));
        assert_eq!(parse_rational("-0.1").unwrap(), ratio(-1, 10));
        assert_eq!(parse_rational("3").unwrap(), rint(3));
        assert_eq!(parse_rational("14/41").unwrap(), ratio(14, 41));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn malformed_literals_rejected() {
        for bad in ["", "1/0", "a", "1.2.3", "--1", "1/x", "."] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn human_format() {
        assert_eq!(format_human(&ratio(2, 5)), "2/5 (0.4)");
        assert_eq!(format_human(&ratio(14, 41)), "14/41 (0.341463)");
        assert_eq!(format_human(&rint(1)), "1 (1)");
        assert_eq!(format_ratio(&rint(0)), "0/1");
    }

    #[test]
    fn huge_rationals_convert_to_float() {
        let big = num_traits::pow(BigInt::from(10), 400);
        let r = Rational::new(big.clone(), big * BigInt::from(4));
        assert!((r.to_f64_lossy() - 0.25).abs() < 1e-12);
    }
}
