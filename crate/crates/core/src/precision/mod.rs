//! Scalars and dense linear algebra over two interchangeable backends:
//! hardware `f64` and [`BigFloat`], an MPFR float with a chosen mantissa width.
//!
//! Extended precision is only needed where exponentially small gaps have to
//! survive: the tridiagonal eigensolver is generic over [`Real`], everything
//! complex-valued runs in double.

mod bigfloat;
mod dense;
mod tridiag;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use bigfloat::BigFloat;
pub use dense::{expm_action, expm_unitary, ExpmRoute, Matrix, Symmetry};
pub use tridiag::{tridiag_eigensolve, SymTridiagonal, TridiagEigen};

/// Mantissa width used when extended precision is requested without a value.
pub const DEFAULT_EXTENDED_BITS: u32 = 192;

#[derive(Debug, thiserror::Error)]
pub enum PrecisionError {
    #[error("matrix violates the {expected} contract: {detail}")]
    Contract {
        expected: &'static str,
        detail: String,
    },
    #[error("eigenvalue {index} did not converge within {cap} bisection steps")]
    NoConvergence { index: usize, cap: usize },
    #[error("empty matrix")]
    Empty,
    #[error("precision of {0} bits is below the 53-bit minimum")]
    BitsTooLow(u32),
}

/// Numeric backend selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Double,
    Extended(u32),
}

impl Precision {
    /// 53 maps to `Double`, anything wider to `Extended`.
    pub fn from_bits(bits: u32) -> Result<Self, PrecisionError> {
        match bits {
            0..=52 => Err(PrecisionError::BitsTooLow(bits)),
            53 => Ok(Precision::Double),
            b => Ok(Precision::Extended(b)),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::Double => 53,
            Precision::Extended(b) => b,
        }
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::Extended(DEFAULT_EXTENDED_BITS)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Double => write!(f, "double"),
            Precision::Extended(b) => write!(f, "extended({b} bits)"),
        }
    }
}

/// Real scalar at a fixed mantissa width.
///
/// `+ − × ÷ sqrt` are correctly rounded in both backends. Binary operations
/// keep the precision of the left operand; callers never mix widths.
pub trait Real:
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
{
    /// Exact embedding of a double (rounded only if `bits < 53`, which no
    /// backend allows).
    fn from_f64(x: f64, bits: u32) -> Self;
    /// `num / den`, correctly rounded.
    fn from_ratio(num: i64, den: i64, bits: u32) -> Self;
    fn pi(bits: u32) -> Self;
    fn bits(&self) -> u32;
    /// Round to nearest double.
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn abs(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn floor(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
    /// Exact multiplication by `2^e`.
    fn mul_pow2(&self, e: i32) -> Self;
    /// Shortest decimal string that reads back to the same value.
    fn to_decimal(&self) -> String;
    /// Exact conversion to an MPFR value of the same width.
    fn to_bigfloat(&self) -> BigFloat;

    fn zero(bits: u32) -> Self {
        Self::from_f64(0.0, bits)
    }

    fn one(bits: u32) -> Self {
        Self::from_f64(1.0, bits)
    }

    /// Unit roundoff `2^-bits`.
    fn unit_roundoff(bits: u32) -> Self {
        Self::one(bits).mul_pow2(-(bits as i32))
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// `self mod m` in `[0, m)`.
    fn rem_euclid(&self, m: &Self) -> Self {
        let q = (self.clone() / m).floor();
        let r = self.clone() - q * m;
        if r < Self::zero(self.bits()) {
            r + m
        } else if !(r < *m) {
            r - m
        } else {
            r
        }
    }
}

impl Real for f64 {
    fn from_f64(x: f64, _bits: u32) -> Self {
        x
    }
    fn from_ratio(num: i64, den: i64, _bits: u32) -> Self {
        num as f64 / den as f64
    }
    fn pi(_bits: u32) -> Self {
        std::f64::consts::PI
    }
    fn bits(&self) -> u32 {
        53
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn mul_pow2(&self, e: i32) -> Self {
        self * 2f64.powi(e)
    }
    fn to_decimal(&self) -> String {
        format!("{self:e}")
    }
    fn to_bigfloat(&self) -> BigFloat {
        BigFloat::from_f64(*self, 53)
    }
}
