//! Numeric abstraction for the optimization kernels.
//!
//! The simplex and vertex-enumeration code is written once over [`Scalar`] and
//! instantiated for `f64`, `f32` and exact big rationals. Exact instances use a
//! zero tolerance, so every comparison is decided by arithmetic alone.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Exact rational scalar.
pub type BigRational = Ratio<BigInt>;

pub trait Scalar:
    Num + NumAssign + Signed + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Threshold below which a pivot candidate or reduced cost counts as zero.
    fn tolerance() -> Self;

    /// Magnitude under which tableau entries are flushed to exact zero after a pivot.
    fn flush_tolerance() -> Self;

    /// Relative slack used when deciding primal feasibility.
    fn feasibility_tolerance() -> Self;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite value")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }
    fn flush_tolerance() -> Self {
        1e-13
    }
    fn feasibility_tolerance() -> Self {
        1e-8
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
    fn flush_tolerance() -> Self {
        1e-7
    }
    fn feasibility_tolerance() -> Self {
        1e-4
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        Self::from_integer(BigInt::from(0))
    }
    fn flush_tolerance() -> Self {
        Self::from_integer(BigInt::from(0))
    }
    fn feasibility_tolerance() -> Self {
        Self::from_integer(BigInt::from(0))
    }
    fn from_f64_lossy(v: f64) -> Self {
        Ratio::from_float(v).expect("finite value")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_scalar_has_zero_tolerance() {
        assert!(BigRational::tolerance() == BigRational::from_integer(0.into()));
        let third = BigRational::new(1.into(), 3.into());
        assert!((third.to_f64_lossy() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn float_round_trip() {
        assert_eq!(f64::from_f64_lossy(2.5), 2.5);
        assert_eq!(BigRational::from_f64_lossy(0.5), BigRational::new(1.into(), 2.into()));
    }
}
