//! Scalar backends.
//!
//! Every object in the crate lives over the complex field. Two concrete
//! representations are supported:
//!
//! * [`ExactScalar`]: Gaussian rationals, `re + i·im` with arbitrary-precision
//!   rational parts. Arithmetic is exact, so coefficient identities can be
//!   asserted with `==`.
//! * [`FloatScalar`]: IEEE-754 binary64 complex numbers, used whenever an
//!   infinite series has to be summed.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::moment::MomentSequence;

pub type ExactScalar = Complex<BigRational>;
pub type FloatScalar = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(Error::Parse(format!("unknown backend '{other}'"))),
        }
    }
}

/// Field operations shared by both backends.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const BACKEND: Backend;

    fn from_i64(v: i64) -> Self;

    fn modulus(&self) -> f64;

    fn to_float(&self) -> FloatScalar;

    /// `m(p)` in this backend.
    fn moment(seq: &MomentSequence, p: usize) -> Result<Self>;

    /// `m(p) / (m(n) m(p - n))`, the weight of the moment-basis Cauchy product.
    fn moment_binomial(seq: &MomentSequence, p: usize, n: usize) -> Result<Self>;

    /// Whether `self` should be treated as zero by a pivot search whose
    /// reference magnitude is `scale`.
    fn negligible(&self, scale: f64, rel_tol: f64) -> bool;
}

impl Scalar for ExactScalar {
    const BACKEND: Backend = Backend::Exact;

    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }

    fn modulus(&self) -> f64 {
        self.to_float().norm()
    }

    fn to_float(&self) -> FloatScalar {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    fn moment(seq: &MomentSequence, p: usize) -> Result<Self> {
        Ok(Complex::new(seq.value_exact(p)?, BigRational::zero()))
    }

    fn moment_binomial(seq: &MomentSequence, p: usize, n: usize) -> Result<Self> {
        let w = seq.value_exact(p)? / (seq.value_exact(n)? * seq.value_exact(p - n)?);
        Ok(Complex::new(w, BigRational::zero()))
    }

    fn negligible(&self, _scale: f64, _rel_tol: f64) -> bool {
        self.is_zero()
    }
}

impl Scalar for FloatScalar {
    const BACKEND: Backend = Backend::Float;

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn to_float(&self) -> FloatScalar {
        *self
    }

    fn moment(seq: &MomentSequence, p: usize) -> Result<Self> {
        Ok(Complex64::new(seq.value_f64(p)?, 0.0))
    }

    fn moment_binomial(seq: &MomentSequence, p: usize, n: usize) -> Result<Self> {
        Ok(Complex64::new(seq.binomial_weight_f64(p, n)?, 0.0))
    }

    fn negligible(&self, scale: f64, rel_tol: f64) -> bool {
        self.norm() <= rel_tol * scale
    }
}

/// Converts a rational to the nearest `f64`, keeping precision for
/// numerators and denominators far outside the `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let ln = ln_abs_rational(r);
    let sign = if r.numer().sign() == num_bigint::Sign::Minus { -1.0 } else { 1.0 };
    sign * ln.exp()
}

/// `ln |r|` for a nonzero rational of arbitrary size.
pub fn ln_abs_rational(r: &BigRational) -> f64 {
    ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom())
}

fn ln_abs_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map(|x| x.abs().ln()).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (v.magnitude() >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Parses `"p"`, `"-p"` or `"p/q"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("'{s}' is not a rational of the form p or p/q"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("'{s}' has a zero denominator")));
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn exact(re: i64, im: i64) -> ExactScalar {
    Complex::new(BigRational::from_integer(BigInt::from(re)), BigRational::from_integer(BigInt::from(im)))
}

pub fn exact_ratio(numer: i64, denom: i64) -> ExactScalar {
    Complex::new(BigRational::new(BigInt::from(numer), BigInt::from(denom)), BigRational::zero())
}

/// Parses a command-line complex number `"re,im"` (or a bare real `"re"`).
pub fn parse_complex(s: &str) -> Result<FloatScalar> {
    let parse =
        |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("'{s}' is not a complex number 're,im'")));
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(parse(re)?, parse(im)?)),
        None => Ok(Complex64::new(parse(s)?, 0.0)),
    }
}

/// Exact counterpart of [`parse_complex`]: `"p/q,r/s"` or `"p/q"`.
pub fn parse_exact_complex(s: &str) -> Result<ExactScalar> {
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex::new(parse_rational(re)?, parse_rational(im)?)),
        None => Ok(Complex::new(parse_rational(s)?, BigRational::zero())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-7").unwrap(), BigRational::from_integer((-7).into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
        assert_eq!(format_rational(&parse_rational("4/2").unwrap()), "2");
        assert_eq!(format_rational(&parse_rational("-2/6").unwrap()), "-1/3");
    }

    #[test]
    fn exact_arithmetic_is_exact() {
        let a = exact_ratio(1, 3);
        let b = exact_ratio(1, 7) + exact(0, 2);
        assert_eq!((a.clone() + b.clone()) - b, a);
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::from_integer(BigInt::from(10).pow(400));
        let v = rational_to_f64(&(BigRational::one() / big.clone()));
        assert_eq!(v, 0.0);
        assert!((ln_abs_rational(&big) - 400.0 * 10f64.ln()).abs() < 1e-9);
        let ratio = big.clone() / (big * BigRational::from_integer(3.into()));
        assert!((rational_to_f64(&ratio) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1,-0.5").unwrap(), Complex64::new(1.0, -0.5));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert!(parse_complex("a,b").is_err());
        assert_eq!(parse_exact_complex("1/2,-3").unwrap(), exact_ratio(1, 2) - exact(0, 3));
        assert!(parse_exact_complex("0.5,0").is_err());
    }
}
