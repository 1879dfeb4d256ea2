//! Coefficient field abstraction.
//!
//! Everything in the crate is generic over [`Scalar`], which is implemented
//! for `f64` (fast, toleranced) and [`Rational`] (arbitrary precision,
//! exact). Code that needs to know which one it is running on checks
//! [`Scalar::EXACT`].

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Exact rational coefficient.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
{
    /// True when arithmetic is exact and tolerances collapse to zero.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn from_big_ratio(numer: &BigInt, denom: &BigInt) -> Self;

    /// Converts a binary64 value. Rationals receive the exact binary value.
    fn from_f64(v: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Feasibility tolerance used by the LP layer: 0 when exact.
    fn feas_tol() -> Self;

    /// Parses `"3"`, `"-1/3"`, `"6.933333"` or `"1e-3"`. Decimal strings are
    /// read exactly in rational mode.
    fn parse_str(s: &str) -> Option<Self>;

    /// Exact rendering for reports (`"-1170"`, `"1/3"`); floats use `{}`.
    fn render_exact(&self) -> String {
        format!("{self}")
    }

    fn from_u128_ratio(numer: u128, denom: u128) -> Self {
        Self::from_big_ratio(&BigInt::from(numer), &BigInt::from(denom))
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
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

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_big_ratio(numer: &BigInt, denom: &BigInt) -> Self {
        ToPrimitive::to_f64(&BigRational::new(numer.clone(), denom.clone())).unwrap_or(f64::NAN)
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn feas_tol() -> Self {
        1e-9
    }

    fn parse_str(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            if d == 0.0 {
                return None;
            }
            return Some(n / d);
        }
        s.parse().ok().filter(|v: &f64| v.is_finite())
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_big_ratio(numer: &BigInt, denom: &BigInt) -> Self {
        BigRational::new(numer.clone(), denom.clone())
    }

    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn feas_tol() -> Self {
        Self::zero()
    }

    fn parse_str(s: &str) -> Option<Self> {
        parse_exact(s)
    }

    fn render_exact(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

fn parse_exact(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_exact(n)?;
        let d = parse_exact(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer = BigInt::from_str(if all_digits.is_empty() { "0" } else { &all_digits }).ok()?;
    if neg {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}
