//! Exact rational arithmetic and the extended value `p/q | inf`.
//!
//! Rationals travel through JSON as `"p/q"` strings. Integers are written with
//! an explicit denominator (`"2/1"`) so every value has the same shape.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational with 128-bit numerators and denominators.
pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

/// Formats as `p/q` with a positive denominator.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q`, a bare integer, or a finite decimal such as `0.25`.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::validation("empty rational"));
    }
    if let Some((a, b)) = t.split_once('/') {
        let n = i128::from_str(a.trim())
            .map_err(|_| Error::validation(format!("bad numerator in {t:?}")))?;
        let d = i128::from_str(b.trim())
            .map_err(|_| Error::validation(format!("bad denominator in {t:?}")))?;
        if d == 0 {
            return Err(Error::validation(format!("zero denominator in {t:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let neg = int.starts_with('-');
        let digits = frac.len() as u32;
        if digits > 30 || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(Error::validation(format!("bad decimal {t:?}")));
        }
        let ip = if int.is_empty() || int == "-" || int == "+" {
            0
        } else {
            i128::from_str(int).map_err(|_| Error::validation(format!("bad decimal {t:?}")))?
        };
        let fp = if frac.is_empty() { 0 } else { i128::from_str(frac).unwrap() };
        let scale = 10i128.pow(digits);
        let mag = ip.abs() * scale + fp;
        return Ok(Q::new(if neg { -mag } else { mag }, scale));
    }
    i128::from_str(t)
        .map(Q::from_integer)
        .map_err(|_| Error::validation(format!("bad rational {t:?}")))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        *x.numer() as f64 / *x.denom() as f64
    })
}

pub fn floor_half(n: u64) -> i128 {
    (n / 2) as i128
}

/// A rational or positive infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtRational {
    Finite(Q),
    Infinity,
}

impl ExtRational {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRational::Infinity)
    }

    pub fn finite(&self) -> Option<Q> {
        match self {
            ExtRational::Finite(x) => Some(*x),
            ExtRational::Infinity => None,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn gt_one(&self) -> bool {
        match self {
            ExtRational::Finite(x) => *x > Q::one(),
            ExtRational::Infinity => true,
        }
    }

    pub fn ge_one(&self) -> bool {
        match self {
            ExtRational::Finite(x) => *x >= Q::one(),
            ExtRational::Infinity => true,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRational::Finite(x) => to_f64(x),
            ExtRational::Infinity => f64::INFINITY,
        }
    }
}

impl From<Q> for ExtRational {
    fn from(x: Q) -> Self {
        ExtRational::Finite(x)
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRational::Infinity, ExtRational::Infinity) => Ordering::Equal,
            (ExtRational::Infinity, _) => Ordering::Greater,
            (_, ExtRational::Infinity) => Ordering::Less,
            (ExtRational::Finite(a), ExtRational::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::Finite(x) => write!(f, "{}", fmt_q(x)),
            ExtRational::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtRational {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            Ok(ExtRational::Infinity)
        } else {
            parse_q(t).map(ExtRational::Finite)
        }
    }
}

impl Serialize for ExtRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Serde adapter for `Q` fields as `"p/q"` strings.
pub mod qstr {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_q(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_q(&s).map_err(de::Error::custom)
    }
}

/// Serde adapter for `Vec<Q>` as a list of `"p/q"` strings.
pub mod qvec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&fmt_q(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| parse_q(s).map_err(de::Error::custom)).collect()
    }
}

pub fn is_positive(x: &Q) -> bool {
    x.is_positive()
}

pub fn is_zero(x: &Q) -> bool {
    x.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_q("-6/8").unwrap(), q(-3, 4));
        assert_eq!(parse_q("2").unwrap(), qi(2));
        assert_eq!(parse_q("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_q("-.5").unwrap(), q(-1, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
    }

    #[test]
    fn integers_keep_denominator() {
        assert_eq!(fmt_q(&qi(2)), "2/1");
        assert_eq!(ExtRational::Infinity.to_string(), "inf");
    }

    #[test]
    fn infinity_orders_last() {
        let a = ExtRational::Finite(qi(1_000_000));
        assert!(a < ExtRational::Infinity);
        assert_eq!(a.min(ExtRational::Infinity), a);
        assert!(ExtRational::Infinity.gt_one());
    }

    #[test]
    fn ext_roundtrip() {
        for s in ["7/3", "inf", "-1/2"] {
            let e: ExtRational = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
    }
}
