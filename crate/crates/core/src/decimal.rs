//! Exact rationals to and from decimal text.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0:?} is not a decimal number or fraction")]
pub struct DecimalError(pub String);

/// Renders `value` with exactly `places` fractional digits, rounding half to
/// even.
pub fn format_decimal(value: &BigRational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = value.abs() * BigRational::from_integer(scale.clone());
    let floor = scaled.floor();
    let remainder = &scaled - &floor;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut digits = floor.to_integer();
    if remainder > half || (remainder == half && (&digits % 2u32) == BigInt::one()) {
        digits += 1;
    }

    let whole = &digits / &scale;
    let frac = &digits % &scale;
    let sign = if value.is_negative() && !digits.is_zero() { "-" } else { "" };
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac:0>width$}", width = places as usize)
    }
}

/// `value · 100` with at most two fractional digits, trailing zeros dropped.
pub fn format_percent(value: &BigRational) -> String {
    let percent = value * BigRational::from_integer(BigInt::from(100));
    let text = format_decimal(&percent, 2);
    text.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Exact textual form: `n` or `n/d` in lowest terms.
pub fn format_exact(value: &BigRational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parses plain decimals such as `"0.3"` or `"-2"`, or a fraction `"3/7"`.
pub fn parse_decimal(text: &str) -> Result<BigRational, DecimalError> {
    let err = || DecimalError(text.to_string());
    let trimmed = text.trim();
    if let Some((numer, denom)) = trimmed.split_once('/') {
        let numer: BigInt = numer.trim().parse().map_err(|_| err())?;
        let denom: BigInt = denom.trim().parse().map_err(|_| err())?;
        if denom.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(numer, denom));
    }

    let (negative, unsigned) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let (whole, frac) = unsigned.split_once('.').unwrap_or((unsigned, ""));
    let all_digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if (whole.is_empty() && frac.is_empty()) || !all_digits(whole) || !all_digits(frac) {
        return Err(err());
    }
    let digits: BigInt = format!("{whole}{frac}").parse().map_err(|_| err())?;
    let scale = BigInt::from(10u32).pow(frac.len() as u32);
    let value = BigRational::new(digits, scale);
    Ok(if negative { -value } else { value })
}

/// Parses the shortest decimal form of a float, so `0.3` becomes exactly 3/10.
pub fn from_f64(value: f64) -> Result<BigRational, DecimalError> {
    if !value.is_finite() {
        return Err(DecimalError(value.to_string()));
    }
    let text = format!("{value}");
    parse_decimal(&text)
}

pub fn ratio(numer: u64, denom: u64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
