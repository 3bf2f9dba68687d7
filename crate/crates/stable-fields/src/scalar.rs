//! Scalar abstractions: a float trait alias for the numeric kernels and a
//! rational trait alias for the exact lane. Concrete aliases live at the
//! crate root (`Real`, `Rational`, `Int`, `Quad`).

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait RealScalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn pi() -> Self {
        Self::from_f64(std::f64::consts::PI).unwrap()
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }

    fn from_f(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }

    fn from_n(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Exact rational scalar used for the coefficients of [`crate::quad::QuadNum`].
///
/// Implemented by `num_rational::Ratio<T>` for the integer backends we care
/// about (`BigInt` for unbounded inputs, `i64` for hot loops with small data).
pub trait RationalScalar:
    Num + Signed + Clone + Ord + Hash + Debug + ToPrimitive + Send + Sync + 'static
{
    fn from_integer_i64(n: i64) -> Self;

    /// Exact conversion of a nonnegative 64-bit integer.
    fn from_integer_u64(n: u64) -> Self;
}

impl RationalScalar for num_rational::BigRational {
    fn from_integer_i64(n: i64) -> Self {
        num_rational::BigRational::from_integer(n.into())
    }

    fn from_integer_u64(n: u64) -> Self {
        num_rational::BigRational::from_integer(n.into())
    }
}

impl RationalScalar for num_rational::Ratio<i64> {
    fn from_integer_i64(n: i64) -> Self {
        num_rational::Ratio::from_integer(n)
    }

    fn from_integer_u64(n: u64) -> Self {
        num_rational::Ratio::from_integer(i64::try_from(n).expect("radicand too large for i64"))
    }
}

impl RationalScalar for num_rational::Ratio<i128> {
    fn from_integer_i64(n: i64) -> Self {
        num_rational::Ratio::from_integer(n as i128)
    }

    fn from_integer_u64(n: u64) -> Self {
        num_rational::Ratio::from_integer(n as i128)
    }
}
