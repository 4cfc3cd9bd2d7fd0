//! Helpers for the exact rational arithmetic used throughout the model.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(value: u64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, an integer, or a plain decimal such as `"-0.125"`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((numer, denom)) = text.split_once('/') {
        let numer: BigInt = numer.trim().parse().ok()?;
        let denom: BigInt = denom.trim().parse().ok()?;
        if denom.is_zero() {
            return None;
        }
        return Some(Rational::new(numer, denom));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Rounds half away from zero to `places` decimals and renders with a decimal point.
pub fn format_decimal(value: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = value * Rational::from_integer(scale.clone());
    let rounded = round_half_away(&scaled);
    let negative = rounded.is_negative();
    let (whole, frac) = rounded.abs().div_rem(&scale);
    let sign = if negative { "-" } else { "" };
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = places)
    }
}

pub fn round_half_away(value: &Rational) -> BigInt {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if value.is_negative() {
        -(-value + half).floor().to_integer()
    } else {
        (value + half).floor().to_integer()
    }
}

/// Exact rational value of a finite `f64`.
pub fn from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

/// Whether the rational has a terminating decimal expansion.
pub fn is_finite_decimal(value: &Rational) -> bool {
    let mut denom = value.denom().clone();
    for p in [2u32, 5] {
        let p = BigInt::from(p);
        while (&denom % &p).is_zero() {
            denom /= &p;
        }
    }
    denom.is_one()
}

/// Exact decimal text for terminating rationals.
pub fn exact_decimal(value: &Rational) -> Option<String> {
    if !is_finite_decimal(value) {
        return None;
    }
    let mut places = 0;
    let ten = Rational::from_integer(BigInt::from(10));
    let mut scaled = value.clone();
    while !scaled.is_integer() {
        scaled *= &ten;
        places += 1;
    }
    Some(format_decimal(value, places))
}
