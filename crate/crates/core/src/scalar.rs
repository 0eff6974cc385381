//! The floating-point abstraction every numerical routine is written against.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Machine-precision-aware floor for relative tolerances.
    fn min_rel_tol() -> Self {
        Self::epsilon() * lit(8.0)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

#[inline]
pub fn from_i64<T: Scalar>(n: i64) -> T {
    T::from_i64(n).expect("i64 representable in scalar type")
}

/// `2^k` for an integer exponent.
#[inline]
pub fn pow2<T: Scalar>(k: i32) -> T {
    lit::<T>(2.0).powi(k)
}

/// `log(e + t)`, the natural logarithm shifted so that it equals 1 at `t = 0`.
#[inline]
pub fn log_e_plus<T: Scalar>(t: T) -> T {
    (T::E() + t).ln()
}

/// Conjugate exponent `p / (p - 1)`.
#[inline]
pub fn conjugate_exponent<T: Scalar>(p: T) -> T {
    p / (p - T::one())
}
