//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar used by the dense and sparse linear algebra: `f32` or `f64`.
///
/// The trait bundles `nalgebra`'s field operations with the `num-traits`
/// conversions so generic code can lift literals and export values.
pub trait Scalar:
    RealField + FromPrimitive + ToPrimitive + Copy + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Machine epsilon of the concrete type.
    fn epsilon() -> Self;
}

impl Scalar for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Scalar for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

/// Lifts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Lifts a count into `T`.
#[inline]
pub fn from_usize<T: Scalar>(x: usize) -> T {
    T::from_usize(x).expect("count representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
