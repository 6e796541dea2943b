use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Constant;
use rug::Float;

use super::Real;

/// MPFR float tagged with its own precision.
#[derive(Clone, Debug, PartialEq)]
pub struct BigFloat(Float);

impl BigFloat {
    pub fn new(value: Float) -> Self {
        BigFloat(value)
    }

    pub fn inner(&self) -> &Float {
        &self.0
    }

    /// Parse a decimal string, rounding to `bits`.
    pub fn parse(s: &str, bits: u32) -> Option<Self> {
        Float::parse(s).ok().map(|p| BigFloat(Float::with_val(bits, p)))
    }

    /// Change the mantissa width, rounding to nearest.
    pub fn with_bits(&self, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, &self.0))
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

impl serde::Serialize for BigFloat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: BigFloat) -> BigFloat {
                BigFloat(self.0 $op rhs.0)
            }
        }
        impl<'a> $tr<&'a BigFloat> for BigFloat {
            type Output = BigFloat;
            fn $method(self, rhs: &'a BigFloat) -> BigFloat {
                BigFloat(self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat(-self.0)
    }
}

impl Real for BigFloat {
    fn from_f64(x: f64, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, x))
    }
    fn from_ratio(num: i64, den: i64, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, num) / den)
    }
    fn pi(bits: u32) -> Self {
        BigFloat(Float::with_val(bits, Constant::Pi))
    }
    fn bits(&self) -> u32 {
        self.0.prec()
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn sqrt(&self) -> Self {
        BigFloat(Float::with_val(self.bits(), self.0.sqrt_ref()))
    }
    fn abs(&self) -> Self {
        BigFloat(self.0.clone().abs())
    }
    fn sin(&self) -> Self {
        BigFloat(Float::with_val(self.bits(), self.0.sin_ref()))
    }
    fn cos(&self) -> Self {
        BigFloat(Float::with_val(self.bits(), self.0.cos_ref()))
    }
    fn floor(&self) -> Self {
        BigFloat(Float::with_val(self.bits(), self.0.floor_ref()))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn mul_pow2(&self, e: i32) -> Self {
        BigFloat(self.0.clone() << e)
    }
    fn to_decimal(&self) -> String {
        self.0.to_string_radix(10, None)
    }
    fn to_bigfloat(&self) -> BigFloat {
        self.clone()
    }
}
