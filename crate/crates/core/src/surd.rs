//! Exact arithmetic in `Q(sqrt(D))` for a fixed non-negative integer `D`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational;

/// `a + b * sqrt(d)` with rational `a`, `b` and squarefree `d >= 1` (or `d = 0`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surd {
    pub a: BigRational,
    pub b: BigRational,
    pub d: BigInt,
}

impl Surd {
    pub fn rational(a: BigRational) -> Self {
        Surd {
            a,
            b: BigRational::zero(),
            d: BigInt::zero(),
        }
    }

    pub fn int(a: i64) -> Self {
        Self::rational(rational::int(a))
    }

    /// `coef * sqrt(radicand)`, with square factors pulled out of the radicand.
    pub fn sqrt_of(coef: BigRational, radicand: &BigRational) -> Result<Self> {
        if radicand.is_negative() {
            return Err(Error::Numeric("square root of a negative number".into()));
        }
        // sqrt(p/q) = sqrt(p*q) / q
        let (p, q) = (radicand.numer().clone(), radicand.denom().clone());
        let (outside, inside) = squarefree_split(&(&p * &q));
        let coef = coef * BigRational::new(outside, q);
        if inside.is_one() {
            return Ok(Self::rational(coef));
        }
        Ok(Surd {
            a: BigRational::zero(),
            b: coef,
            d: inside,
        })
    }

    fn field(&self, other: &Surd) -> Result<BigInt> {
        match (self.b.is_zero(), other.b.is_zero()) {
            (true, _) => Ok(other.d.clone()),
            (_, true) => Ok(self.d.clone()),
            _ if self.d == other.d => Ok(self.d.clone()),
            _ => Err(Error::Numeric(format!(
                "mixing sqrt({}) and sqrt({})",
                self.d, other.d
            ))),
        }
    }

    pub fn try_add(&self, other: &Surd) -> Result<Surd> {
        let d = self.field(other)?;
        Ok(Surd {
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            d,
        })
    }

    pub fn try_mul(&self, other: &Surd) -> Result<Surd> {
        let d = self.field(other)?;
        let dr = BigRational::from_integer(d.clone());
        Ok(Surd {
            a: &self.a * &other.a + &self.b * &other.b * dr,
            b: &self.a * &other.b + &self.b * &other.a,
            d,
        })
    }

    pub fn recip(&self) -> Result<Surd> {
        let norm = &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(self.d.clone());
        if norm.is_zero() {
            return Err(Error::Numeric("division by zero".into()));
        }
        Ok(Surd {
            a: &self.a / &norm,
            b: -&self.b / &norm,
            d: self.d.clone(),
        })
    }

    pub fn powi(&self, e: i64) -> Result<Surd> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc = Surd::int(1);
        for _ in 0..e.unsigned_abs() {
            acc = acc.try_mul(&base)?;
        }
        Ok(acc)
    }

    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = if self.d.is_zero() {
            Ordering::Equal
        } else {
            self.b.cmp(&BigRational::zero())
        };
        if sa == sb || sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal {
            return sb;
        }
        // Opposite signs: compare a^2 with b^2 d.
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * BigRational::from_integer(self.d.clone());
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn cmp_rational(&self, x: &BigRational) -> Ordering {
        Surd {
            a: &self.a - x,
            b: self.b.clone(),
            d: self.d.clone(),
        }
        .signum()
    }

    pub fn to_f64(&self) -> f64 {
        rational::to_f64(&self.a) + rational::to_f64(&self.b) * rational::to_f64(&BigRational::from_integer(self.d.clone())).sqrt()
    }

    /// Exact floor, found from an integer square root estimate and corrected by exact comparison.
    pub fn floor(&self) -> BigInt {
        let d_root = self.d.sqrt();
        let approx = &self.a + &self.b * BigRational::from_integer(d_root);
        let mut k = approx.floor().to_integer();
        while self.cmp_rational(&BigRational::from_integer(k.clone())) == Ordering::Less {
            k -= 1;
        }
        while self.cmp_rational(&BigRational::from_integer(&k + 1)) != Ordering::Less {
            k += 1;
        }
        k
    }

    pub fn ceil(&self) -> BigInt {
        let f = self.floor();
        if self.cmp_rational(&BigRational::from_integer(f.clone())) == Ordering::Equal {
            f
        } else {
            f + 1
        }
    }
}

impl Add<&BigRational> for &Surd {
    type Output = Surd;
    fn add(self, x: &BigRational) -> Surd {
        Surd {
            a: &self.a + x,
            b: self.b.clone(),
            d: self.d.clone(),
        }
    }
}

impl Sub<&BigRational> for &Surd {
    type Output = Surd;
    fn sub(self, x: &BigRational) -> Surd {
        self + &(-x)
    }
}

impl Mul<&BigRational> for &Surd {
    type Output = Surd;
    fn mul(self, x: &BigRational) -> Surd {
        Surd {
            a: &self.a * x,
            b: &self.b * x,
            d: self.d.clone(),
        }
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            a: -&self.a,
            b: -&self.b,
            d: self.d.clone(),
        }
    }
}

/// Writes `n = s^2 * r` with `r` squarefree and returns `(s, r)`.
fn squarefree_split(n: &BigInt) -> (BigInt, BigInt) {
    if n.is_zero() {
        return (BigInt::zero(), BigInt::one());
    }
    let mut rest = n.clone();
    let mut outside = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= rest {
        let sq = &p * &p;
        while rest.is_multiple_of(&sq) {
            rest /= &sq;
            outside *= &p;
        }
        p += 1;
    }
    (outside, rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn squarefree_parts() {
        assert_eq!(squarefree_split(&BigInt::from(360)), (BigInt::from(6), BigInt::from(10)));
        assert_eq!(squarefree_split(&BigInt::from(49)), (BigInt::from(7), BigInt::from(1)));
    }

    #[test]
    fn ceilings() {
        // 750 + 600 + sqrt(750) = 1377.386...
        let s = &Surd::sqrt_of(int(1), &int(750)).unwrap() + &int(1350);
        assert_eq!(s.ceil(), BigInt::from(1378));
        assert_eq!(s.floor(), BigInt::from(1377));
        let exact = Surd::sqrt_of(int(1), &int(16)).unwrap();
        assert_eq!(exact.ceil(), BigInt::from(4));
        let neg = -&Surd::sqrt_of(int(1), &int(2)).unwrap();
        assert_eq!(neg.ceil(), BigInt::from(-1));
        assert_eq!(neg.floor(), BigInt::from(-2));
    }

    #[test]
    fn field_arithmetic() {
        let r = Surd::sqrt_of(int(1), &ratio(15, 2)).unwrap();
        let sq = r.try_mul(&r).unwrap();
        assert_eq!(sq.cmp_rational(&ratio(15, 2)), Ordering::Equal);
        let inv = r.recip().unwrap().try_mul(&r).unwrap();
        assert_eq!(inv, Surd { a: int(1), b: int(0), d: r.d.clone() });
        assert!(Surd::sqrt_of(int(1), &int(2)).unwrap().try_add(&Surd::sqrt_of(int(1), &int(3)).unwrap()).is_err());
    }
}
