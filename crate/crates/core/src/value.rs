//! Domain values shared by structures, the grounder and the solver bridge.

use std::fmt;

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// A domain element: a truth value, an exact number, a named element of a
/// custom type, or a concept (a reference to a vocabulary symbol).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Num(BigRational),
    Elem(String),
    Concept(String),
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Num(BigRational::from_integer(BigInt::from(i)))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self {
            Value::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Value::Num(n) if n.is_integer())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(n) => write!(f, "{}", format_number(n)),
            Value::Elem(e) => write!(f, "{e}"),
            Value::Concept(c) => write!(f, "`{c}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Num(n) if n.is_integer() => match n.to_integer().to_i64() {
                Some(i) => s.serialize_i64(i),
                None => s.serialize_str(&n.to_string()),
            },
            Value::Num(n) => match n.to_f64() {
                Some(x) if format_decimal(n).parse::<f64>().ok() == Some(x) => s.serialize_f64(x),
                _ => s.serialize_str(&format_number(n)),
            },
            other => s.serialize_str(&other.to_string()),
        }
    }
}

/// Integers without a decimal point, other numbers as decimals when exact.
pub fn format_number(n: &BigRational) -> String {
    if n.is_integer() {
        n.to_integer().to_string()
    } else {
        format_decimal(n)
    }
}

/// Decimal notation with at least one fractional digit (`25.0`, `18.5`).
/// Numbers without a finite decimal expansion print as `n/d`.
pub fn format_decimal(n: &BigRational) -> String {
    let mut denom = n.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while denom.is_even() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return format!("{}/{}", n.numer(), n.denom());
    }
    let digits = twos.max(fives).max(1);
    let scaled = (n * BigRational::from_integer(num::pow(BigInt::from(10), digits))).to_integer();
    let neg = scaled.is_negative();
    let s = scaled.abs().to_string();
    let s = format!("{s:0>width$}", width = digits + 1);
    let (int_part, frac) = s.split_at(s.len() - digits);
    let frac = frac.trim_end_matches('0');
    let frac = if frac.is_empty() { "0" } else { frac };
    format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac)
}

/// Parses `17`, `-3`, `18.5`, `1/3` into an exact rational.
pub fn parse_number(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_number(n)?;
        let d = parse_number(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let numer: BigInt = format!("{int_part}{frac}").parse().ok()?;
    let r = BigRational::new(numer, num::pow(BigInt::from(10), frac.len()));
    Some(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimals() {
        assert_eq!(format_decimal(&q(37, 2)), "18.5");
        assert_eq!(format_decimal(&q(25, 1)), "25.0");
        assert_eq!(format_decimal(&q(-1, 8)), "-0.125");
        assert_eq!(format_decimal(&q(1, 3)), "1/3");
        assert_eq!(format_number(&q(17, 1)), "17");
    }

    #[test]
    fn parse_numbers() {
        assert_eq!(parse_number("18.5"), Some(q(37, 2)));
        assert_eq!(parse_number("-3"), Some(q(-3, 1)));
        assert_eq!(parse_number("1/3"), Some(q(1, 3)));
        assert_eq!(parse_number("abc"), None);
    }

    #[test]
    fn json_shape() {
        let j = |v: Value| serde_json::to_string(&v).unwrap();
        assert_eq!(j(Value::int(17)), "17");
        assert_eq!(j(Value::Num(q(37, 2))), "18.5");
        assert_eq!(j(Value::Num(q(1, 3))), "\"1/3\"");
        assert_eq!(j(Value::Bool(true)), "true");
        assert_eq!(j(Value::Elem("Bob".into())), "\"Bob\"");
    }
}
