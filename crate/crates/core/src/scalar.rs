//! Coefficient field abstraction shared by the exact (rational) and the
//! floating-point code paths.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for every symbolic computation.
pub type Rational = BigRational;

/// A field of polynomial coefficients.
pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl Coeff for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
}

impl Coeff for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

/// Nearest-double conversion that survives numerators and denominators
/// too large for `f64`.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(r) {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer();
    let d = r.denom();
    let shift = (n.bits() as i64 - d.bits() as i64) - 60;
    let scaled = if shift > 0 {
        Rational::new(n.clone(), d.clone() << shift as usize)
    } else {
        Rational::new(n.clone() << (-shift) as usize, d.clone())
    };
    let mant = ToPrimitive::to_f64(&scaled.to_integer()).unwrap_or(f64::NAN);
    mant * 2f64.powi(shift as i32)
}

/// Exact rational with the same value as a finite double.
pub fn rational_from_f64(v: f64) -> Rational {
    Rational::from_float(v).unwrap_or_else(Rational::zero)
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Canonical decimal-free text form: `p` or `p/q`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_negative(r: &Rational) -> bool {
    r.is_negative()
}
