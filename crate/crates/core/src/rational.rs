//! Exact rational numbers.
//!
//! Every probability, count, dual value and truth degree in the crate is a
//! [`Rational`]: an arbitrary-precision fraction kept in lowest terms with a
//! positive denominator.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}`")]
pub struct RationalParseError(pub String);

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `num/den`, an integer, or a decimal such as `0.75` (converted exactly).
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{}{}", if whole.is_empty() { "0" } else { whole }, frac);
    let numer = BigInt::from_str(&digits).map_err(|_| err())?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Ok(if neg { -value } else { value })
}

/// Exact textual form: `n` for integers, `n/d` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Scales a rational vector by the LCM of its denominators and divides out
/// the GCD of the numerators, giving the primitive integer vector on the same ray.
pub fn primitive_integer_vector(values: &[Rational]) -> Vec<BigInt> {
    let l = lcm_of_denominators(values);
    let scaled: Vec<BigInt> = values
        .iter()
        .map(|v| (v * Rational::from_integer(l.clone())).to_integer())
        .collect();
    let g = scaled
        .iter()
        .fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g.is_zero() {
        return scaled;
    }
    scaled.into_iter().map(|v| v / &g).collect()
}

pub fn floor(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

pub fn ceil(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

/// Distance from `r` to the nearest integer.
pub fn integrality_gap(r: &Rational) -> Rational {
    let down = r - r.floor();
    let up = r.ceil() - r;
    if down < up {
        down
    } else {
        up
    }
}

pub fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && r <= &Rational::one()
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_convert_exactly() {
        assert_eq!(parse_rational("0.75").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("0.15").unwrap(), ratio(3, 20));
        assert_eq!(parse_rational("1").unwrap(), int(1));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-2.5").unwrap(), ratio(-5, 2));
        assert_eq!(parse_rational("1/3").unwrap(), ratio(1, 3));
        assert_eq!(parse_rational("2/4").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1/0", "abc", "1.2.3", ".", "0x1", "1e3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formatting_is_exact() {
        assert_eq!(format_rational(&ratio(3, 20)), "3/20");
        assert_eq!(format_rational(&int(-4)), "-4");
        assert_eq!(format_rational(&ratio(6, 3)), "2");
    }

    #[test]
    fn primitive_vector_clears_denominators() {
        let v = primitive_integer_vector(&[ratio(1, 2), ratio(-1, 3)]);
        assert_eq!(v, vec![BigInt::from(3), BigInt::from(-2)]);
        let v = primitive_integer_vector(&[int(2), int(-2), int(0)]);
        assert_eq!(v, vec![BigInt::from(1), BigInt::from(-1), BigInt::from(0)]);
    }

    #[test]
    fn gap_to_nearest_integer() {
        assert_eq!(integrality_gap(&ratio(7, 3)), ratio(1, 3));
        assert_eq!(integrality_gap(&ratio(8, 3)), ratio(1, 3));
        assert_eq!(integrality_gap(&int(5)), int(0));
    }
}
