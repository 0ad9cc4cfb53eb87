//! Exact rational helpers shared by the probability, geometry and LP code.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::InstanceError;

/// Parses `"a/b"`, integer, decimal and scientific literals exactly.
///
/// `"0.6"` becomes `3/5`; `"1e-3"` becomes `1/1000`.
pub fn parse_rational(text: &str) -> Result<BigRational, InstanceError> {
    let s = text.trim();
    let bad = || InstanceError::BadLiteral(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_decimal(num.trim()).ok_or_else(bad)?;
        let den = parse_decimal(den.trim()).ok_or_else(bad)?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(num / den);
    }
    parse_decimal(s).ok_or_else(bad)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let shift = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    value *= pow(&ten, shift as i64);
    if negative {
        value = -value;
    }
    Some(value)
}

/// Exact conversion of a finite float (every finite `f64` is dyadic rational).
pub fn from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Very large numerators/denominators: scale through logarithms.
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * (log_abs(r)).exp()
}

/// Natural log of |r| without overflowing for huge numerators/denominators.
pub fn log_abs(r: &BigRational) -> f64 {
    fn log_int(x: &BigInt) -> f64 {
        let bits = x.bits();
        if bits < 1000 {
            return x.to_f64().map(|v| v.abs().ln()).unwrap_or(f64::NAN);
        }
        let shift = bits - 64;
        let top: BigInt = x.abs() >> shift;
        top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    log_int(r.numer()) - log_int(r.denom())
}

/// `base^exp` for any integer exponent; `0^0 = 1`.
pub fn pow(base: &BigRational, exp: i64) -> BigRational {
    if exp == 0 {
        return BigRational::one();
    }
    let mut result = BigRational::one();
    let mut b = if exp < 0 { base.recip() } else { base.clone() };
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            result *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    result
}

/// Renders `a/b`, or `a` for integers.
pub fn format(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn parses_literals_exactly() {
        assert_eq!(parse_rational("0.6").unwrap(), r(3, 5));
        assert_eq!(parse_rational("1/3").unwrap(), r(1, 3));
        assert_eq!(parse_rational(" -2 ").unwrap(), r(-2, 1));
        assert_eq!(parse_rational("1e-3").unwrap(), r(1, 1000));
        assert_eq!(parse_rational("2.5E1").unwrap(), r(25, 1));
        assert_eq!(parse_rational(".25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("0.5/2").unwrap(), r(1, 4));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1/0", "1.2.3", "--1", "0x10", "/"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn pow_handles_negative_exponents() {
        assert_eq!(pow(&r(2, 3), 3), r(8, 27));
        assert_eq!(pow(&r(2, 3), -2), r(9, 4));
        assert_eq!(pow(&r(0, 1), 0), r(1, 1));
    }

    #[test]
    fn huge_values_convert_through_logs() {
        let big = pow(&r(10, 1), 400);
        assert!((log_abs(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
        let tiny = pow(&r(1, 10), 400);
        assert_eq!(to_f64(&tiny), 0.0);
    }
}
