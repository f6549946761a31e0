//! Numeric substrate: exact rationals, high-precision reals, and the two
//! finite special-function sums used by the closed forms.
//!
//! Closed-form quantities are computed in [`Rational`] and never leave exact
//! arithmetic. [`Float`] appears only where square roots or eigen-solves are
//! unavoidable; every `Float` carries its own precision, and the helpers in
//! [`Precision`] build constants at a consistent precision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::ops::Pow;
pub use rug::{Float, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default working precision for real arithmetic, in decimal digits.
pub const DEFAULT_DIGITS: u32 = 50;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Arithmetic shared by [`Rational`] and [`Float`].
///
/// Constants are created from an existing value (`*_like`) so that real
/// values inherit the precision of their operands.
pub trait Field:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    fn rational_like(&self, value: &Rational) -> Self;

    fn int_like(&self, value: i64) -> Self {
        self.rational_like(&Rational::from(value))
    }

    fn zero_like(&self) -> Self {
        self.int_like(0)
    }

    fn one_like(&self) -> Self {
        self.int_like(1)
    }

    fn is_zero(&self) -> bool;

    fn abs_value(&self) -> Self;
}

impl Field for Rational {
    fn rational_like(&self, value: &Rational) -> Self {
        value.clone()
    }

    fn is_zero(&self) -> bool {
        self.cmp0() == Ordering::Equal
    }

    fn abs_value(&self) -> Self {
        self.clone().abs()
    }
}

impl Field for Float {
    fn rational_like(&self, value: &Rational) -> Self {
        Float::with_val(self.prec(), value)
    }

    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }

    fn abs_value(&self) -> Self {
        self.clone().abs()
    }
}

/// Rising factorial `x (x+1) ... (x+n-1)`; equals one for `n = 0`.
pub fn pochhammer<T: Field>(x: &T, n: usize) -> T {
    let mut acc = x.one_like();
    let mut factor = x.clone();
    let one = x.one_like();
    for _ in 0..n {
        acc *= &factor;
        factor += &one;
    }
    acc
}

/// `n!` as an exact rational.
pub fn factorial(n: usize) -> Rational {
    pochhammer(&Rational::from(1), n)
}

/// Terminating ₄F₃ series
/// `Σ_{j=0}^{n} (-n)_j (a1)_j (a2)_j (a3)_j / ((b1)_j (b2)_j (b3)_j j!) x^j`.
///
/// Fails with [`Error::DenominatorPole`] when some `(b_i)_j` vanishes for a
/// `j` inside the summation range.
pub fn hyp_4f3_truncated<T: Field>(n: usize, a: &[T; 3], b: &[T; 3], x: &T) -> Result<T> {
    let one = x.one_like();
    let mut term = x.one_like();
    let mut sum = term.clone();
    let minus_n = x.int_like(-(n as i64));
    for j in 0..n {
        let jj = x.int_like(j as i64);
        let mut denom = jj.clone() + &one;
        for bi in b {
            let shifted = bi.clone() + &jj;
            if shifted.is_zero() {
                return Err(Error::DenominatorPole { term: j + 1 });
            }
            denom *= &shifted;
        }
        let mut numer = minus_n.clone() + &jj;
        for ai in a {
            numer *= &(ai.clone() + &jj);
        }
        term = term * &numer / &denom * x;
        sum += &term;
    }
    Ok(sum)
}

/// Sign of an exact value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(value: &Rational) -> Self {
        match value.cmp0() {
            Ordering::Less => Sign::Negative,
            Ordering::Equal => Sign::Zero,
            Ordering::Greater => Sign::Positive,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

/// `(-1)^n` as a small integer.
pub fn parity_sign(n: usize) -> i64 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Working precision of real arithmetic, in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    digits: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { digits: DEFAULT_DIGITS }
    }
}

impl Precision {
    /// At least 11 digits are required so that the default tolerance
    /// `10^-(digits-10)` stays below one.
    pub fn new(digits: u32) -> Result<Self> {
        if digits < 11 {
            return Err(Error::InvalidArgument(format!(
                "precision must be at least 11 decimal digits, got {digits}"
            )));
        }
        Ok(Precision { digits })
    }

    pub fn digits(self) -> u32 {
        self.digits
    }

    /// Binary precision with a few guard bits.
    pub fn bits(self) -> u32 {
        (f64::from(self.digits) * LOG2_10).ceil() as u32 + 16
    }

    pub fn doubled(self) -> Self {
        Precision {
            digits: self.digits * 2,
        }
    }

    pub fn real(self, value: &Rational) -> Float {
        Float::with_val(self.bits(), value)
    }

    pub fn real_int(self, value: i64) -> Float {
        Float::with_val(self.bits(), value)
    }

    pub fn tolerance(self) -> Tolerance {
        Tolerance::power_of_ten(self, self.digits as i32 - 10)
    }
}

/// Positive absolute tolerance for comparisons of real results.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerance {
    eps: Float,
}

impl Tolerance {
    pub fn new(eps: Float) -> Result<Self> {
        if eps.is_nan() || eps.cmp0() != Some(Ordering::Greater) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {eps}")));
        }
        Ok(Tolerance { eps })
    }

    /// `10^-exponent` at the given precision.
    pub fn power_of_ten(precision: Precision, exponent: i32) -> Self {
        let ten = precision.real_int(10);
        Tolerance {
            eps: ten.pow(-exponent),
        }
    }

    pub fn eps(&self) -> &Float {
        &self.eps
    }

    /// `|value| < eps`.
    pub fn accepts(&self, value: &Float) -> bool {
        value.clone().abs() < self.eps
    }

    pub fn scaled(&self, factor: i64) -> Self {
        Tolerance {
            eps: self.eps.clone() * factor,
        }
    }

    pub fn sqrt(&self) -> Self {
        Tolerance {
            eps: self.eps.clone().sqrt(),
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_real(&self.eps, 3))
    }
}

/// Either an exact rational or a high-precision real.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Real(Float),
}

impl Scalar {
    pub fn to_real(&self, precision: Precision) -> Float {
        match self {
            Scalar::Exact(r) => precision.real(r),
            Scalar::Real(x) => Float::with_val(precision.bits().max(x.prec()), x),
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Real(_) => None,
        }
    }
}

impl From<Rational> for Scalar {
    fn from(value: Rational) -> Self {
        Scalar::Exact(value)
    }
}

impl From<Float> for Scalar {
    fn from(value: Float) -> Self {
        Scalar::Real(value)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => f.write_str(&encode_rational(r)),
            Scalar::Real(x) => f.write_str(&encode_real(x)),
        }
    }
}

/// Exact values serialize as `"p/q"`, reals as round-trip decimal strings.
impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// A string containing `/` is read as exact; anything else as a real whose
/// precision covers the number of significant digits given.
impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        if text.contains('/') {
            parse_rational(&text)
                .map(Scalar::Exact)
                .map_err(serde::de::Error::custom)
        } else {
            let digits = text.chars().filter(char::is_ascii_digit).count() as u32;
            let precision = Precision::new(digits.max(DEFAULT_DIGITS)).expect("digits >= 50");
            parse_real(&text, precision.bits())
                .map(Scalar::Real)
                .map_err(serde::de::Error::custom)
        }
    }
}

/// `"p/q"` with `q >= 1`, also for integers.
pub fn encode_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Shortest decimal string that reads back to the same value at the same
/// precision.
pub fn encode_real(value: &Float) -> String {
    value.to_string_radix(10, None)
}

/// Decimal string with `digits` significant digits.
pub fn format_real(value: &Float, digits: usize) -> String {
    value.to_string_radix(10, Some(digits.max(1)))
}

pub fn parse_real(text: &str, bits: u32) -> Result<Float> {
    let parsed = Float::parse(text.trim()).map_err(|e| Error::Parse {
        input: text.to_string(),
        reason: e.to_string(),
    })?;
    Ok(Float::with_val(bits, parsed))
}

/// Parses `"p/q"`, integers, and decimals such as `"0.5"` or `"-1.25e-2"`
/// exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let trimmed = text.trim();
    let fail = |reason: &str| Error::Parse {
        input: text.to_string(),
        reason: reason.to_string(),
    };
    if trimmed.is_empty() {
        return Err(fail("empty string"));
    }
    if let Some((num, den)) = trimmed.split_once('/') {
        let num = parse_decimal(num.trim()).ok_or_else(|| fail("bad numerator"))?;
        let den = parse_decimal(den.trim()).ok_or_else(|| fail("bad denominator"))?;
        if den.cmp0() == Ordering::Equal {
            return Err(fail("zero denominator"));
        }
        return Ok(num / den);
    }
    parse_decimal(trimmed).ok_or_else(|| fail("not a rational or decimal number"))
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, unsigned) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = unsigned.split_once('.').unwrap_or((unsigned, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_str_radix(&digits, 10).ok()?;
    let scale = exponent - frac_part.len() as i32;
    value *= Rational::from(10).pow(scale);
    if negative {
        value = -value;
    }
    Some(value)
}

/// Serde adapter: a [`Rational`] as a `"p/q"` string.
pub mod pq {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&encode_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Decimal strings for a slice of reals; [`decode_reals`] at the same binary
/// precision restores the values exactly.
pub fn encode_reals(values: &[Float]) -> Vec<String> {
    values.iter().map(encode_real).collect()
}

pub fn decode_reals(text: &[String], bits: u32) -> Result<Vec<Float>> {
    text.iter().map(|t| parse_real(t, bits)).collect()
}

/// Serde adapter: a sequence of rationals as `"p/q"` strings.
pub mod pq_seq {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(encode_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter: a row-major table of rationals as `"p/q"` strings.
pub mod pq_rows {
    use super::*;

    pub fn serialize<S: Serializer>(rows: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let encoded: Vec<Vec<String>> = rows
            .iter()
            .map(|row| row.iter().map(encode_rational).collect())
            .collect();
        encoded.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        let texts = Vec::<Vec<String>>::deserialize(d)?;
        texts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}
