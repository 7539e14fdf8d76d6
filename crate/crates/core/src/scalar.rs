//! Number types used for circle-map arithmetic.
//!
//! Two backends exist: `f64` for iteration-heavy work and [`Rational`] for
//! exact fixtures. Floating maps prune degenerate structure (near-equal slopes,
//! segments shorter than [`MIN_SEGMENT`]); rational maps never approximate.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Segments shorter than this are merged in floating mode.
pub const MIN_SEGMENT: f64 = 1e-14;

/// Relative tolerance under which two floating slopes count as equal.
pub const SLOPE_RTOL: f64 = 1e-12;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }
    /// Lossless for rationals (binary expansion of the float).
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn floor(&self) -> Self;
    fn abs(&self) -> Self;
    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }
    fn same_slope(a: &Self, b: &Self) -> bool;
    fn negligible_len(len: &Self) -> bool;

    fn frac(&self) -> Self {
        self.clone() - self.floor()
    }

    /// Distance from `self` to the nearest integer, in `[0, 1/2]`.
    fn dist_to_int(&self) -> Self {
        let f = self.frac();
        let g = Self::one() - f.clone();
        if f < g {
            f
        } else {
            g
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a < b {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
    fn frac(&self) -> Self {
        let f = self - f64::floor(*self);
        // tiny negatives round up to 1.0
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }
    fn same_slope(a: &Self, b: &Self) -> bool {
        f64::abs(a - b) <= SLOPE_RTOL * f64::max(f64::max(f64::abs(*a), f64::abs(*b)), 1.0)
    }
    fn negligible_len(len: &Self) -> bool {
        *len < MIN_SEGMENT
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn floor(&self) -> Self {
        BigRational::floor(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn same_slope(a: &Self, b: &Self) -> bool {
        a == b
    }
    fn negligible_len(len: &Self) -> bool {
        len.is_zero()
    }
}

/// JSON encoding of scalars: plain numbers for floats, `[p, q]` integer pairs
/// for rationals.
pub trait Portable: Scalar {
    fn to_json(&self) -> Option<serde_json::Value>;
    fn from_json(v: &serde_json::Value) -> Option<Self>;
}

impl Portable for f64 {
    fn to_json(&self) -> Option<serde_json::Value> {
        serde_json::Number::from_f64(*self).map(serde_json::Value::Number)
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        v.as_f64()
    }
}

impl Portable for Rational {
    fn to_json(&self) -> Option<serde_json::Value> {
        Some(serde_json::json!([self.numer().to_i64()?, self.denom().to_i64()?]))
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        match v {
            serde_json::Value::Array(pair) if pair.len() == 2 => {
                let (p, q) = (pair[0].as_i64()?, pair[1].as_i64()?);
                (q != 0).then(|| Rational::from_ratio(p, q))
            }
            serde_json::Value::Number(n) => n.as_i64().map(Rational::from_int),
            serde_json::Value::String(s) => parse_rational(s),
            _ => None,
        }
    }
}

/// Parses `"p/q"`, an integer or a finite decimal such as `"-0.125"`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int}{frac}").parse().ok()?;
        return Some(BigRational::new(digits, num_traits::pow(BigInt::from(10), frac.len())));
    }
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_to_int_handles_negatives() {
        assert_eq!((-0.25f64).dist_to_int(), 0.25);
        assert_eq!(1.75f64.dist_to_int(), 0.25);
        let r = Rational::from_ratio(-7, 4);
        assert_eq!(r.dist_to_int(), Rational::from_ratio(1, 4));
    }

    #[test]
    fn rational_powers_are_exact() {
        let half = Rational::from_ratio(1, 2);
        assert_eq!(half.powi(10), Rational::from_ratio(1, 1024));
        assert_eq!(parse_rational("3/8"), Some(Rational::from_ratio(3, 8)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("0.7"), Some(Rational::from_ratio(7, 10)));
        assert_eq!(parse_rational("-0.125"), Some(Rational::from_ratio(-1, 8)));
        assert_eq!(parse_rational("1."), None);
        assert_eq!(parse_rational("1.2.3"), None);
    }
}
