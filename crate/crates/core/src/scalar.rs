//! Number types shared by the exact and floating-point code paths.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Field operations needed by the solvers and the cell-matrix code.
///
/// Implemented for [`Rational`] (exact mode) and `f64` (float mode) so every
/// algorithm is written once.
pub trait Scalar:
    Num + Clone + Debug + PartialOrd + Neg<Output = Self> + Send + Sync + 'static
{
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
    fn is_exact() -> bool;
    /// The value itself in exact mode.
    fn as_exact(&self) -> Option<&Rational>;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| ratio_to_f64_slow(self))
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn is_exact() -> bool {
        true
    }
    fn as_exact(&self) -> Option<&Rational> {
        Some(self)
    }
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        Scalar::to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn is_exact() -> bool {
        false
    }
    fn as_exact(&self) -> Option<&Rational> {
        None
    }
}

fn ratio_to_f64_slow(r: &Rational) -> f64 {
    // numerator and denominator may both overflow f64 individually
    let n = r.numer().bits() as i64;
    let d = r.denom().bits() as i64;
    let shift = n - d - 60;
    let scaled = if shift >= 0 {
        r.numer() / (r.denom() << shift as usize)
    } else {
        (r.numer() << (-shift) as usize) / r.denom()
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

/// Whether results are carried exactly or in `f64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Exact,
    Float,
}

impl ArithmeticMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithmeticMode::Exact => "exact",
            ArithmeticMode::Float => "float",
        }
    }
}

/// Mode requested by a caller; `Auto` resolves by problem size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeRequest {
    #[default]
    Auto,
    Exact,
    Float,
}

impl ModeRequest {
    pub fn resolve(self, size: usize, exact_threshold: usize) -> ArithmeticMode {
        match self {
            ModeRequest::Exact => ArithmeticMode::Exact,
            ModeRequest::Float => ArithmeticMode::Float,
            ModeRequest::Auto if size <= exact_threshold => ArithmeticMode::Exact,
            ModeRequest::Auto => ArithmeticMode::Float,
        }
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// `p/q` text form; integers print as `p/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Float with 15 significant digits, as used by the human-readable CLI output.
pub fn format_sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.14e}")
    }
}

/// Serde adapter writing a rational as its `p/q` string.
pub mod serde_pq {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).ok_or_else(|| serde::de::Error::custom("expected p/q"))
    }
}
