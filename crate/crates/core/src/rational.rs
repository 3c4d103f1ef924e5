//! Exact rational numbers and the few helpers the geometry needs on top of
//! `num-rational`: string parsing, dyadic floor/ceil and stable logarithms.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// `n / d` as a [`Rational`].
///
/// Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-n`.
pub fn dyadic(n: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n)
}

/// Parses `"p/q"`, an integer, or a decimal string such as `"0.25"` or
/// `"-1.5e-3"`. Decimal strings are converted exactly (`"0.1"` is `1/10`).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(t).ok_or_else(|| Error::Parse(format!("not a rational or decimal: {s:?}")))
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    if neg {
        num = -num;
    }
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| ln_abs(q).exp() * if q.is_negative() { -1.0 } else { 1.0 })
}

/// Natural logarithm of `|n|` for a nonzero big integer, accurate to f64
/// precision regardless of size.
pub(crate) fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of `|q|`; `q` must be nonzero.
pub fn ln_abs(q: &Rational) -> f64 {
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

/// `floor(q * 2^n)`.
pub fn floor_dyadic(q: &Rational, n: u32) -> BigInt {
    let scaled: BigInt = q.numer() << n;
    scaled.div_floor(q.denom())
}

/// `ceil(q * 2^n)`.
pub fn ceil_dyadic(q: &Rational, n: u32) -> BigInt {
    let scaled: BigInt = q.numer() << n;
    let (d, m) = scaled.div_mod_floor(q.denom());
    if m.is_zero() {
        d
    } else {
        d + 1
    }
}

/// Clamps a big integer into `[0, max]` and converts.
pub(crate) fn clamp_index(i: &BigInt, max: u64) -> u64 {
    match i.sign() {
        Sign::Minus | Sign::NoSign => 0,
        Sign::Plus => i.to_u64().map_or(max, |v| v.min(max)),
    }
}

pub(crate) fn in_open_unit(q: &Rational) -> bool {
    q.is_positive() && q < &Rational::one()
}

/// Serde adapter storing a [`Rational`] as its `"p/q"` string; accepts
/// decimal strings on input.
pub mod serde_str {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(" 6/8 ").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational(".1").unwrap(), rat(1, 10));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("2.5e-2").unwrap(), rat(1, 40));
        assert_eq!(parse_rational("1E3").unwrap(), int(1000));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "1/0", "a/2", "0.2.3", "--1", "1/2/3", "."] {
            assert!(parse_rational(s).is_err(), "{s:?} should not parse");
        }
    }

    #[test]
    fn formats_round_trip() {
        for q in [rat(7, 16), int(0), int(-4), rat(-3, 5)] {
            assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
        }
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
    }

    #[test]
    fn dyadic_floor_ceil() {
        assert_eq!(floor_dyadic(&rat(1, 4), 4), BigInt::from(4));
        assert_eq!(ceil_dyadic(&rat(1, 4), 4), BigInt::from(4));
        assert_eq!(floor_dyadic(&rat(1, 3), 4), BigInt::from(5));
        assert_eq!(ceil_dyadic(&rat(1, 3), 4), BigInt::from(6));
        assert_eq!(floor_dyadic(&rat(-1, 3), 2), BigInt::from(-2));
    }

    #[test]
    fn logs_of_huge_and_tiny() {
        let tiny = Rational::new(BigInt::one(), num_traits::pow(BigInt::from(9), 400));
        let expect = -400.0 * 9f64.ln();
        assert!((ln_abs(&tiny) - expect).abs() < 1e-9 * expect.abs());
        assert!((ln_abs(&rat(1, 8)) + 8f64.ln()).abs() < 1e-15);
    }
}
