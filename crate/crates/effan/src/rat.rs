//! Arbitrary-precision rationals and Gaussian rationals.
//!
//! `Rational` is kept in canonical form (positive denominator, reduced) at
//! construction, so equality and hashing are structural. `rat_sqrt_approx`
//! returns a certified dyadic-denominator approximation of a square root;
//! its error bound is exact and is the substrate every modulus computation
//! in this crate rests on.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative rational {0}")]
    NegativeSqrt(String),
    #[error("malformed rational literal `{0}`")]
    Parse(String),
}

/// An exact rational number in canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: BigInt, denom: BigInt) -> Result<Self, ScalarError> {
        if denom.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }

    pub fn from_biguint(n: &BigUint) -> Self {
        Rational(BigRational::from_integer(BigInt::from_biguint(
            Sign::Plus,
            n.clone(),
        )))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// `2^e` for any integer exponent (negative gives a dyadic fraction).
    pub fn pow2(e: i64) -> Self {
        if e >= 0 {
            Rational(BigRational::from_integer(BigInt::one() << e as usize))
        } else {
            Rational(BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn recip(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, ScalarError> {
        if rhs.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// Smallest `k >= 0` with `|self| <= 2^k`.
    pub fn mag_exponent(&self) -> u32 {
        if self.is_zero() {
            return 0;
        }
        let a = self.abs();
        let nb = a.numer().bits();
        let db = a.denom().bits();
        let mut k = nb.saturating_sub(db - 1); // |a| < 2^(nb - db + 1)
        while k > 0 && a <= Rational::pow2(k as i64 - 1) {
            k -= 1;
        }
        k as u32
    }

    /// Decimal-free display used by the crate's text formats.
    pub fn to_ratio_string(&self) -> String {
        format!("{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ratio_string())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ratio_string())
    }
}

impl FromStr for Rational {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (ns, ds) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n = BigInt::from_str(ns).map_err(|_| ScalarError::Parse(s.to_string()))?;
        let d = BigInt::from_str(ds).map_err(|_| ScalarError::Parse(s.to_string()))?;
        if d.is_zero() {
            return Err(ScalarError::Parse(s.to_string()));
        }
        Ok(Rational(BigRational::new(n, d)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_ratio_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! rational_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
    };
}

rational_binop!(Add, add, +);
rational_binop!(Sub, sub, -);
rational_binop!(Mul, mul, *);

impl Div for &Rational {
    type Output = Rational;
    /// Panics on a zero divisor; use [`Rational::checked_div`] where the
    /// divisor is not known to be nonzero.
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

/// Certified rational square-root approximation.
///
/// For `a >= 0` returns `q >= 0` with `|q - sqrt(a)| <= 2^-(n+1) < 2^-n`,
/// deterministically. Computed as `isqrt(numer * denom * 4^(n+1))` over the
/// scaled denominator, so the certificate is exact integer arithmetic.
pub fn rat_sqrt_approx(a: &Rational, n: u32) -> Result<Rational, ScalarError> {
    if a.is_negative() {
        return Err(ScalarError::NegativeSqrt(a.to_ratio_string()));
    }
    if a.is_zero() {
        return Ok(Rational::from_int(0));
    }
    let m = (n as usize) + 1;
    let p = a.numer().magnitude();
    let q = a.denom().magnitude();
    // sqrt(a) = sqrt(p*q) / q, so isqrt(p*q*4^m) / (q*2^m) is within 1/(q*2^m) <= 2^-m.
    let t: BigUint = (p * q) << (2 * m);
    let s = t.sqrt();
    Ok(Rational(BigRational::new(
        BigInt::from_biguint(Sign::Plus, s),
        BigInt::from_biguint(Sign::Plus, q << m),
    )))
}

/// A complex number with rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn from_rational(re: Rational) -> Self {
        GaussianRational {
            re,
            im: Rational::from_int(0),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_int(n))
    }

    pub fn i() -> Self {
        GaussianRational {
            re: Rational::from_int(0),
            im: Rational::from_int(1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussianRational {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// `|z|^2 = re^2 + im^2`, exact.
    pub fn norm_sq(&self) -> Rational {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    /// Exact upper bound for `|z|`: `|re| + |im|`.
    pub fn abs_upper(&self) -> Rational {
        &self.re.abs() + &self.im.abs()
    }

    /// Exact lower bound for `|z|`: `max(|re|, |im|)`; positive iff `z != 0`.
    pub fn abs_lower(&self) -> Rational {
        self.re.abs().max(self.im.abs())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        GaussianRational {
            re: &self.re * c,
            im: &self.im * c,
        }
    }

    /// Text form `p/q+r/si` (sign of the imaginary part folded into `r`).
    pub fn to_text(&self) -> String {
        if self.im.is_negative() {
            format!("{}-{}i", self.re.to_ratio_string(), self.im.abs().to_ratio_string())
        } else {
            format!("{}+{}i", self.re.to_ratio_string(), self.im.to_ratio_string())
        }
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl FromStr for GaussianRational {
    type Err = ScalarError;

    /// Accepts `p/q`, `p/q+r/si`, and `p/q-r/si` (integers allowed in place
    /// of fractions).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(body) = s.strip_suffix('i') {
            // Split at the last +/- that is not a leading sign.
            let bytes = body.as_bytes();
            let mut split = None;
            for idx in (1..bytes.len()).rev() {
                if bytes[idx] == b'+' || bytes[idx] == b'-' {
                    if bytes[idx - 1] == b'/' {
                        continue; // sign belongs to a denominator, malformed anyway
                    }
                    split = Some(idx);
                    break;
                }
            }
            let idx = split.ok_or_else(|| ScalarError::Parse(s.to_string()))?;
            let re: Rational = body[..idx].parse()?;
            let sign = if bytes[idx] == b'-' { -1i64 } else { 1 };
            let im: Rational = body[idx + 1..].parse()?;
            let im = if sign < 0 { -&im } else { im };
            Ok(GaussianRational { re, im })
        } else {
            Ok(GaussianRational::from_rational(s.parse()?))
        }
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

impl Ord for GaussianRational {
    /// Lexicographic (re, im); used only for canonical sorting of outputs.
    fn cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

impl PartialOrd for GaussianRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
