//! Small helpers around `BigRational`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn from_biguint(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

/// `base^exp` for any integer exponent; `base` must be non-zero when `exp < 0`.
pub fn powi(base: &BigRational, exp: i64) -> BigRational {
    if exp >= 0 {
        Pow::pow(base, exp as u64)
    } else {
        Pow::pow(base.recip(), exp.unsigned_abs())
    }
}

pub fn floor_to_i64(x: &BigRational) -> i64 {
    x.floor().to_integer().to_i64().expect("floor fits in i64")
}

pub fn ceil_to_i64(x: &BigRational) -> i64 {
    x.ceil().to_integer().to_i64().expect("ceil fits in i64")
}

pub fn to_f64(x: &BigRational) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    // Shift so both parts fit comfortably in f64 before dividing.
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift_n = (nb - 900).max(0) as usize;
    let shift_d = (db - 900).max(0) as usize;
    let n = (x.numer() >> shift_n).to_f64().unwrap_or(f64::NAN);
    let d = (x.denom() >> shift_d).to_f64().unwrap_or(f64::NAN);
    let e = shift_n as i64 - shift_d as i64;
    let mut v = n / d;
    let mut e = e;
    while e > 0 {
        let s = e.min(1000);
        v *= 2f64.powi(s as i32);
        e -= s;
    }
    while e < 0 {
        let s = (-e).min(1000);
        v /= 2f64.powi(s as i32);
        e += s;
    }
    v
}

/// Natural log of a positive rational, accurate to about 1e-15 relative.
pub fn ln(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "ln of non-positive rational");
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let sn = (nb - 64).max(0) as usize;
    let sd = (db - 64).max(0) as usize;
    let n = (x.numer() >> sn).to_f64().expect("shifted numerator");
    let d = (x.denom() >> sd).to_f64().expect("shifted denominator");
    n.ln() - d.ln() + (sn as f64 - sd as f64) * std::f64::consts::LN_2
}

/// Parses `"7"`, `"-3/4"` or a finite decimal like `"0.6550826"` exactly.
pub fn parse(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Param(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp10) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}").parse().map_err(|_| bad())?;
    let scale = exp10 - fp.len() as i64;
    let ten = int(10);
    let mut v = BigRational::from_integer(digits) * powi(&ten, scale);
    if neg {
        v = -v;
    }
    Ok(v)
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// JSON-friendly exact rational: numerator and denominator as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalPair {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for RationalPair {
    fn from(x: &BigRational) -> Self {
        RationalPair {
            num: x.numer().to_string(),
            den: x.denom().to_string(),
        }
    }
}

impl RationalPair {
    pub fn to_rational(&self) -> Result<BigRational> {
        parse(&format!("{}/{}", self.num, self.den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse("0.8").unwrap(), ratio(4, 5));
        assert_eq!(parse("-3/6").unwrap(), ratio(-1, 2));
        assert_eq!(parse("600").unwrap(), int(600));
        assert_eq!(parse("1.5e2").unwrap(), int(150));
        assert_eq!(parse("0.6550826").unwrap(), ratio(3275413, 5000000));
        assert!(parse("abc").is_err());
        assert!(parse("1/0").is_err());
    }

    #[test]
    fn negative_powers() {
        assert_eq!(powi(&int(2), -3), ratio(1, 8));
        assert_eq!(powi(&ratio(2, 3), 2), ratio(4, 9));
    }

    #[test]
    fn float_views() {
        let tiny = powi(&int(600), -200);
        assert!((ln(&tiny) + 200.0 * 600f64.ln()).abs() < 1e-9);
        assert!((to_f64(&ratio(1, 3)) - 1.0 / 3.0).abs() < 1e-16);
        let huge = powi(&int(10), 300);
        assert!((to_f64(&huge) / 1e300 - 1.0).abs() < 1e-12);
    }
}
