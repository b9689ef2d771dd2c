//! Extended-precision reals backed by `astro-float`.
//!
//! Every transcendental evaluation that feeds a verdict goes through [`Ext`]
//! at [`PRECISION`] bits. Comparisons against a threshold use
//! [`certify_le`], which reports `Inconclusive` whenever the two sides are
//! within the requested relative margin.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Mantissa bits used for every extended-precision value.
pub const PRECISION: usize = 192;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

#[derive(Clone)]
pub struct Ext(BigFloat);

impl Ext {
    pub fn from_f64(x: f64) -> Self {
        Ext(BigFloat::from_f64(x, PRECISION))
    }

    pub fn from_i64(x: i64) -> Self {
        Ext(BigFloat::from_i64(x, PRECISION))
    }

    pub fn zero() -> Self {
        Self::from_i64(0)
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    /// Parses a decimal literal such as `"0.6550826"` without passing through `f64`.
    pub fn parse(s: &str) -> Self {
        with_consts(|cc| Ext(BigFloat::parse(s, Radix::Dec, PRECISION, RM, cc)))
    }

    pub fn from_bigint(x: &BigInt) -> Self {
        Self::parse(&x.to_str_radix(10))
    }

    pub fn from_ratio(x: &BigRational) -> Self {
        &Self::from_bigint(x.numer()) / &Self::from_bigint(x.denom())
    }

    /// Euler's number.
    pub fn e() -> Self {
        with_consts(|cc| Ext(cc.e(PRECISION, RM)))
    }

    pub fn ln(&self) -> Self {
        with_consts(|cc| Ext(self.0.ln(PRECISION, RM, cc)))
    }

    pub fn exp(&self) -> Self {
        with_consts(|cc| Ext(self.0.exp(PRECISION, RM, cc)))
    }

    pub fn sqrt(&self) -> Self {
        Ext(self.0.sqrt(PRECISION, RM))
    }

    pub fn powi(&self, n: usize) -> Self {
        Ext(self.0.powi(n, PRECISION, RM))
    }

    /// `self^y` for `self > 0`.
    pub fn powf(&self, y: &Ext) -> Self {
        (&self.ln() * y).exp()
    }

    pub fn abs(&self) -> Self {
        Ext(self.0.abs())
    }

    pub fn is_finite(&self) -> bool {
        !(self.0.is_nan() || self.0.is_inf())
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn max(&self, other: &Ext) -> Ext {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn min(&self, other: &Ext) -> Ext {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Nearest `f64`, truncating the mantissa to its top 64 bits first.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        if self.0.is_zero() {
            return 0.0;
        }
        let (words, _, sign, exponent, _) = self.0.as_raw_parts().expect("finite value");
        let top = *words.last().expect("non-empty mantissa") as f64;
        let v = ldexp(top, exponent as i64 - 64);
        if sign.is_negative() {
            -v
        } else {
            v
        }
    }

    /// The exact binary value as a rational, `None` for NaN and infinities.
    pub fn to_ratio(&self) -> Option<BigRational> {
        if self.0.is_zero() {
            return Some(BigRational::zero());
        }
        let (words, _, sign, exponent, _) = self.0.as_raw_parts()?;
        let mantissa = words
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, &w| (acc << 64) + BigInt::from(w));
        let shift = exponent as i64 - 64 * words.len() as i64;
        let magnitude = if shift >= 0 {
            BigRational::from_integer(mantissa << shift as usize)
        } else {
            BigRational::new(mantissa, BigInt::one() << (-shift) as usize)
        };
        Some(if sign.is_negative() { -magnitude } else { magnitude })
    }

    /// Decimal rendering with the requested number of significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let s = format!("{}", self.0);
        match s.find('e') {
            Some(pos) => {
                let (m, e) = s.split_at(pos);
                let keep = m.len().min(digits + 2);
                format!("{}{}", &m[..keep], e)
            }
            None => s,
        }
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

impl fmt::Debug for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ext({})", self.to_decimal(30))
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20))
    }
}

/// Serialized as a decimal string carrying the full working precision.
impl Serialize for Ext {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&format!("{}", self.0))
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        let v = Ext::parse(&s);
        if v.0.is_nan() {
            return Err(serde::de::Error::custom(format!("not a number: {s}")));
        }
        Ok(v)
    }
}

impl PartialEq for Ext {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $call:ident) => {
        impl $trait<&Ext> for &Ext {
            type Output = Ext;
            fn $method(self, rhs: &Ext) -> Ext {
                Ext(self.0.$call(&rhs.0, PRECISION, RM))
            }
        }
        impl $trait<Ext> for Ext {
            type Output = Ext;
            fn $method(self, rhs: Ext) -> Ext {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Ext> for Ext {
            type Output = Ext;
            fn $method(self, rhs: &Ext) -> Ext {
                (&self).$method(rhs)
            }
        }
        impl $trait<Ext> for &Ext {
            type Output = Ext;
            fn $method(self, rhs: Ext) -> Ext {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        Ext(self.0.neg())
    }
}

impl Neg for &Ext {
    type Output = Ext;
    fn neg(self) -> Ext {
        Ext(self.0.clone().neg())
    }
}

/// Outcome of a margin-guarded numerical comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    /// Combines two verdicts: any failure fails, otherwise any doubt is inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Certifies `lhs <= rhs`: pass only when `lhs` clears `rhs` by `rel_margin * |rhs|`.
pub fn certify_le(lhs: &Ext, rhs: &Ext, rel_margin: f64) -> Verdict {
    if !lhs.is_finite() || !rhs.is_finite() {
        return Verdict::Inconclusive;
    }
    let slack = &rhs.abs() * &Ext::from_f64(rel_margin);
    if lhs <= &(rhs - &slack) {
        Verdict::Pass
    } else if lhs > &(rhs + &slack) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Certifies `lhs <= rhs` with an absolute margin.
pub fn certify_le_abs(lhs: &Ext, rhs: &Ext, margin: f64) -> Verdict {
    if !lhs.is_finite() || !rhs.is_finite() {
        return Verdict::Inconclusive;
    }
    let m = Ext::from_f64(margin);
    if lhs <= &(rhs - &m) {
        Verdict::Pass
    } else if lhs > &(rhs + &m) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;
    use num_bigint::BigInt;

    #[test]
    fn round_trips_f64() {
        for x in [1.0, -0.75, 3.5e-200, 1.25e250, 0.1] {
            assert_eq!(Ext::from_f64(x).to_f64(), x);
        }
    }

    #[test]
    fn decimal_parse_is_exact_enough() {
        let a = Ext::parse("0.6550826");
        let diff = (&a - &Ext::from_f64(0.6550826)).abs().to_f64();
        assert!(diff < 1e-16);
        let third = &Ext::one() / &Ext::from_i64(3);
        let back = &third * &Ext::from_i64(3);
        assert!((&back - &Ext::one()).abs().to_f64() < 1e-50);
    }

    #[test]
    fn transcendental_identities() {
        let e = Ext::e();
        assert!((e.ln().to_f64() - 1.0).abs() < 1e-15);
        let x = Ext::parse("2.5");
        let y = x.powf(&Ext::from_i64(3));
        assert!((y.to_f64() - 15.625).abs() < 1e-12);
        assert!((Ext::from_i64(2).sqrt().to_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn exact_rational_view() {
        assert_eq!(Ext::from_f64(-2.75).to_ratio().unwrap(), BigRational::new((-11).into(), 4.into()));
        assert_eq!(Ext::from_i64(3).to_ratio().unwrap(), BigRational::from_integer(3.into()));
        let third = &Ext::one() / &Ext::from_i64(3);
        let r = third.to_ratio().unwrap();
        assert!((r - BigRational::new(1.into(), 3.into())).abs() < BigRational::new(1.into(), BigInt::one() << 180));
    }

    #[test]
    fn ratio_conversion() {
        let r = BigRational::new(BigInt::from(1), BigInt::from(3));
        assert!((Ext::from_ratio(&r).to_f64() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn margin_verdicts() {
        let one = Ext::one();
        assert_eq!(certify_le(&Ext::from_f64(0.5), &one, 1e-9), Verdict::Pass);
        assert_eq!(certify_le(&Ext::from_f64(1.5), &one, 1e-9), Verdict::Fail);
        assert_eq!(certify_le(&one, &one, 1e-9), Verdict::Inconclusive);
        assert_eq!(Verdict::Pass.and(Verdict::Inconclusive), Verdict::Inconclusive);
        assert_eq!(Verdict::Inconclusive.and(Verdict::Fail), Verdict::Fail);
    }
}
