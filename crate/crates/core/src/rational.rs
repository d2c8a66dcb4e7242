//! Parsing and formatting helpers for exact rationals.
//!
//! The text formats accepted here are the ones used by instance files and
//! command-line flags: a fraction `p/q`, a plain integer, or a decimal
//! literal such as `0.35`, which is parsed exactly as `35/100`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Shorthand for building a rational from machine integers.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// 10^exp as a rational.
pub fn pow10(exp: u32) -> Rat {
    Rat::from_integer(BigInt::from(10u32).pow(exp))
}

/// Parses `p/q`, an integer, or a decimal literal, all exactly.
pub fn parse_rational(text: &str) -> Result<Rat, ParseRationalError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let invalid = || ParseRationalError::Invalid(trimmed.to_string());
    if let Some((num, den)) = trimmed.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| invalid())?;
        let den: BigInt = den.trim().parse().map_err(|_| invalid())?;
        if den.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(trimmed.to_string()));
        }
        return Ok(Rat::new(num, den));
    }
    if let Some((int_part, frac_part)) = trimmed.split_once('.') {
        let (sign, int_digits) = match int_part.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, int_part.strip_prefix('+').unwrap_or(int_part)),
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        if !int_digits.is_empty() && !int_digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let int_digits = if int_digits.is_empty() { "0" } else { int_digits };
        let whole: BigInt = int_digits.parse().map_err(|_| invalid())?;
        let frac: BigInt = frac_part.parse().map_err(|_| invalid())?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let value = Rat::from_integer(whole) + Rat::new(frac, scale);
        return Ok(value * Rat::from_integer(BigInt::from(sign)));
    }
    let whole: BigInt = trimmed.parse().map_err(|_| invalid())?;
    Ok(Rat::from_integer(whole))
}

/// Nearest rational with the given denominator (ties round up).
pub fn round_to_denominator(x: &Rat, denom: &BigInt) -> Rat {
    // round(x * denom) / denom with round(y) = floor(y + 1/2)
    let scaled = x * Rat::from_integer(denom.clone());
    let rounded = (scaled + Rat::new(BigInt::one(), BigInt::from(2)))
        .floor()
        .to_integer();
    Rat::new(rounded, denom.clone())
}

/// Formats a rational with exactly 15 significant decimal digits.
///
/// The digits are computed exactly from the fraction, so the output is
/// deterministic and independent of any floating-point rounding. Values are
/// rendered in plain positional notation (no exponent); magnitudes in this
/// crate stay within a few orders of magnitude of 1.
pub fn decimal_15(x: &Rat) -> String {
    const DIGITS: u32 = 15;
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let abs = x.abs();
    // decimal exponent e with 10^e <= abs < 10^(e+1)
    let mut e: i64 = 0;
    let ten = Rat::from_integer(BigInt::from(10));
    let mut probe = abs.clone();
    while probe >= ten {
        probe /= ten.clone();
        e += 1;
    }
    while probe < Rat::one() {
        probe *= ten.clone();
        e -= 1;
    }
    // round(abs * 10^(DIGITS-1-e)) with ties away from zero
    let shift = DIGITS as i64 - 1 - e;
    let scaled = if shift >= 0 {
        abs.clone() * pow10(shift as u32)
    } else {
        abs.clone() / pow10((-shift) as u32)
    };
    let two = BigInt::from(2);
    let mut mantissa = (&two * scaled.numer() + scaled.denom()) / (&two * scaled.denom());
    let top = BigInt::from(10u32).pow(DIGITS);
    if mantissa >= top {
        // rounding carried into a new leading digit
        mantissa /= BigInt::from(10);
        e += 1;
    }
    let digits = mantissa.to_string();
    debug_assert_eq!(digits.len(), DIGITS as usize);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if e >= 0 {
        let point = (e + 1) as usize;
        if point >= digits.len() {
            out.push_str(&digits);
            for _ in 0..point - digits.len() {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..point]);
            out.push('.');
            out.push_str(&digits[point..]);
        }
    } else {
        out.push_str("0.");
        for _ in 0..(-e - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    }
    out
}
