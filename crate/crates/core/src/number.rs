//! Exact parsing of real-number literals.
//!
//! Accepts decimals (`0.25`, `-1.5e-3`), ratios (`1/256`) and sums of them
//! (`1/2-1/256`). The value is accumulated as an exact rational and rounded
//! to the nearest `f64` once, at the end.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// A parse failure with a 0-based character offset into the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberError {
    pub offset: usize,
    pub message: String,
}

fn fail<T>(offset: usize, message: &str) -> Result<T, NumberError> {
    Err(NumberError { offset, message: message.to_string() })
}

/// Parses `text` exactly, then rounds to the nearest double.
pub fn parse_real(text: &str) -> Result<f64, NumberError> {
    let value = parse_rational(text)?;
    match value.to_f64() {
        Some(v) if v.is_finite() => Ok(v),
        _ => fail(0, "value is not representable as a finite double"),
    }
}

/// Parses a sum of signed decimal/ratio terms into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, NumberError> {
    let bytes = text.as_bytes();
    if text.trim().is_empty() {
        return fail(0, "expected a number");
    }
    let mut pos = 0;
    let mut total = BigRational::zero();
    let mut first = true;
    while pos < bytes.len() {
        let mut negative = false;
        match bytes[pos] {
            b'+' | b'-' => {
                negative = bytes[pos] == b'-';
                pos += 1;
            }
            _ if !first => return fail(pos, "expected `+` or `-` between terms"),
            _ => {}
        }
        first = false;
        let (numerator, next) = parse_decimal(text, pos)?;
        pos = next;
        let mut term = numerator;
        if pos < bytes.len() && bytes[pos] == b'/' {
            let (denominator, next) = parse_decimal(text, pos + 1)?;
            if denominator.is_zero() {
                return fail(pos + 1, "division by zero");
            }
            term /= denominator;
            pos = next;
        }
        total = if negative { total - term } else { total + term };
    }
    Ok(total)
}

/// Unsigned decimal with optional fraction and exponent, starting at `start`.
fn parse_decimal(text: &str, start: usize) -> Result<(BigRational, usize), NumberError> {
    let bytes = text.as_bytes();
    let mut pos = start;
    let mut digits = String::new();
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        digits.push(bytes[pos] as char);
        pos += 1;
    }
    let mut scale: i64 = 0;
    if pos < bytes.len() && bytes[pos] == b'.' {
        pos += 1;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            digits.push(bytes[pos] as char);
            scale -= 1;
            pos += 1;
        }
    }
    if digits.is_empty() {
        return fail(start, "expected digits");
    }
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let exp_start = pos + 1;
        let mut end = exp_start;
        if end < bytes.len() && (bytes[end] == b'+' || bytes[end] == b'-') {
            end += 1;
        }
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        let exponent: i64 = match text[exp_start..end].parse() {
            Ok(e) if (-400..=400).contains(&e) => e,
            _ => return fail(exp_start, "malformed exponent"),
        };
        scale += exponent;
        pos = end;
    }
    let mantissa: BigInt = digits.parse().expect("ascii digits");
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(mantissa * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(mantissa, num_traits::pow(ten, (-scale) as usize))
    };
    Ok((value, pos))
}
