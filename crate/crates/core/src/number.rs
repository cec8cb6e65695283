//! Exact rational numbers and their textual form.
//!
//! Every weight, score, cost and gain is held as a [`Rational`]. On disk and
//! in reports they are written as plain decimal strings (`"0.2"`, `"102.5"`).
//! Values with no finite decimal expansion (a weight of one third after
//! redistribution, say) are written as `"p/q"`; the parser accepts both forms,
//! so everything this crate emits can be read back without loss.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number {text:?}: {reason}")]
pub struct ParseNumberError {
    pub text: String,
    pub reason: &'static str,
}

fn err(text: &str, reason: &'static str) -> ParseNumberError {
    ParseNumberError {
        text: text.to_owned(),
        reason,
    }
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `"12"`, `"-0.25"`, `".5"` or `"1/3"`.
pub fn parse(text: &str) -> Result<Rational, ParseNumberError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(err(text, "empty string"));
    }
    if let Some((n, d)) = s.split_once('/') {
        let numer = parse_decimal(n.trim()).map_err(|r| err(text, r))?;
        let denom = parse_decimal(d.trim()).map_err(|r| err(text, r))?;
        if denom.is_zero() {
            return Err(err(text, "zero denominator"));
        }
        return Ok(numer / denom);
    }
    parse_decimal(s).map_err(|r| err(text, r))
}

fn parse_decimal(s: &str) -> Result<Rational, &'static str> {
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err("no digits");
    }
    if !whole
        .bytes()
        .chain(frac.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err("expected a decimal number");
    }
    let digits = format!("{whole}{frac}");
    let mantissa: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| "expected a decimal number")?
    };
    let scale = num_traits::pow(BigInt::from(10u32), frac.len());
    let value = Rational::new(mantissa, scale);
    Ok(if negative { -value } else { value })
}

/// True when `value` has a finite decimal expansion.
pub fn is_decimal(value: &Rational) -> bool {
    let mut d = value.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    while d.is_even() {
        d /= &two;
    }
    while (&d % &five).is_zero() {
        d /= &five;
    }
    d.is_one()
}

/// Number of fractional digits in the decimal expansion, `None` if infinite.
pub fn decimal_places(value: &Rational) -> Option<usize> {
    if !is_decimal(value) {
        return None;
    }
    let mut places = 0;
    let mut scaled = value.clone();
    while !scaled.is_integer() {
        scaled *= int(10);
        places += 1;
    }
    Some(places)
}

/// Canonical text: shortest exact decimal, or `p/q` when none exists.
pub fn format(value: &Rational) -> String {
    let Some(places) = decimal_places(value) else {
        return format!("{}/{}", value.numer(), value.denom());
    };
    let scaled = (value.abs()
        * Rational::from_integer(num_traits::pow(BigInt::from(10u32), places)))
    .to_integer()
    .to_string();
    let sign = if value.is_negative() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{scaled}");
    }
    let padded = format!("{scaled:0>width$}", width = places + 1);
    let (w, f) = padded.split_at(padded.len() - places);
    format!("{sign}{w}.{f}")
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `x` in exact form with display through [`format`].
pub struct Exact<'a>(pub &'a Rational);

impl fmt::Display for Exact<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format(self.0))
    }
}

/// Clamps into `[0, 1]`.
pub fn clamp_unit(value: Rational) -> Rational {
    if value.is_negative() {
        Rational::zero()
    } else if value > Rational::one() {
        Rational::one()
    } else {
        value
    }
}

/// Exact test of `diff > sqrt(variance)` for a non-negative `variance`.
pub fn exceeds_sqrt(diff: &Rational, variance: &Rational) -> bool {
    diff.is_positive() && diff * diff > *variance
}
