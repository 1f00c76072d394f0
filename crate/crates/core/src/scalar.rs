//! Numeric modes.
//!
//! Every solver is generic over a [`Scalar`]: either exact rationals
//! ([`Rational`], arbitrary precision) or `f64` with a domination tolerance.
//! Model probabilities are always stored exactly and converted once, when a
//! [`crate::model::Kernel`] is compiled.

use std::fmt::Debug;
use std::hash::Hash;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Default domination tolerance in float mode.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Hashable canonical form of a scalar, used for memoization keys and
/// deduplication.
///
/// Exact values are kept in lowest terms; floats are rounded to 12 decimal
/// digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarKey {
    Exact(BigInt, BigInt),
    Small(i128, i128),
    Rounded(i64),
}

/// Number type a solver runs on.
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
    + Zero
    + One
{
    /// True for exact arithmetic; tolerances are ignored in that case.
    const EXACT: bool;

    /// Converts an exact rational, or `None` when it is not representable.
    fn from_rational(r: &Rational) -> Option<Self>;

    fn from_int(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact value of `self`. Floats convert through their binary expansion.
    fn to_rational(&self) -> Rational;

    fn key(&self) -> ScalarKey;

    /// `self >= other - tol`, with `tol` ignored in exact mode.
    fn at_least(&self, other: &Self, tol: f64) -> bool;

    /// `|self - other| <= tol`, exact equality in exact mode.
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        self.at_least(other, tol) && other.at_least(self, tol)
    }

    /// Strictly positive beyond `tol` (exact: `> 0`).
    fn positive(&self, tol: f64) -> bool;

    /// Human-readable rendering: `p/q` for exact values, decimal for floats.
    fn render(&self) -> String;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Option<Self> {
        ToPrimitive::to_f64(r)
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Rational {
        BigRational::from_float(*self).unwrap_or_else(Rational::zero)
    }

    fn key(&self) -> ScalarKey {
        let scaled = (self * 1e12).round();
        // -0.0 and 0.0 collapse to the same key
        ScalarKey::Rounded(if scaled == 0.0 { 0 } else { scaled as i64 })
    }

    fn at_least(&self, other: &Self, tol: f64) -> bool {
        *self >= *other - tol
    }

    fn positive(&self, tol: f64) -> bool {
        *self > tol
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Option<Self> {
        Some(r.clone())
    }

    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Rational {
        self.clone()
    }

    fn key(&self) -> ScalarKey {
        ScalarKey::Exact(self.numer().clone(), self.denom().clone())
    }

    fn at_least(&self, other: &Self, _tol: f64) -> bool {
        self >= other
    }

    fn positive(&self, _tol: f64) -> bool {
        self.is_positive()
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

/// Fixed-width rational used by the exhaustive exact routines, where
/// denominators are tiny and allocation-free arithmetic matters.
pub type SmallRational = Ratio<i128>;

impl Scalar for SmallRational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Option<Self> {
        Some(Ratio::new(r.numer().to_i128()?, r.denom().to_i128()?))
    }

    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom()))
    }

    fn key(&self) -> ScalarKey {
        ScalarKey::Small(*self.numer(), *self.denom())
    }

    fn at_least(&self, other: &Self, _tol: f64) -> bool {
        self >= other
    }

    fn positive(&self, _tol: f64) -> bool {
        *self.numer() > 0
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

/// Parses a probability written as a decimal (`"0.25"`, `"1"`, `"2.5e-1"`)
/// or a fraction (`"1/3"`) into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Number(text.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = t[pos + 1..].parse().map_err(|_| bad())?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Writes a rational as a terminating decimal when it has one, otherwise as
/// `p/q`. [`parse_rational`] inverts this exactly.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    // terminating iff the denominator is 2^a * 5^b
    let mut d = r.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut digits = 0usize;
    let mut twos = 0usize;
    let mut fives = 0usize;
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    digits += twos.max(fives);
    if digits > 30 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let scaled = r * Rational::from_integer(num_traits::pow(BigInt::from(10), digits));
    let n = scaled.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let s = n.abs().to_string();
    let s = format!("{s:0>width$}", width = digits + 1);
    let (ip, fp) = s.split_at(s.len() - digits);
    format!("{sign}{ip}.{fp}")
}

/// Rounds `x` to `decimals` decimal places and returns the exact decimal.
pub fn decimal_from_f64(x: f64, decimals: u32) -> Rational {
    let scale = 10i64.pow(decimals);
    Rational::new(
        BigInt::from((x * scale as f64).round() as i64),
        BigInt::from(scale),
    )
}

/// Least common multiple of the denominators of `values` (1 when empty).
pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}
