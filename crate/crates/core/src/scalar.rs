//! Scalar abstraction shared by the numerical modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real scalar used throughout the dynamics, equilibrium and stability code.
///
/// Implemented for `f32` and `f64`. Tolerances are written as `f64` literals
/// and converted with [`lit`].
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Lossy conversion back to `f64` for reporting and serialization.
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Machine epsilon of `T` as `T`.
#[inline]
pub fn eps<T: Scalar>() -> T {
    T::default_epsilon()
}
