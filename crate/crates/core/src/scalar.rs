//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the filtering, estimation and metric code is generic over.
///
/// Implemented for `f32` and `f64`. Numeric tolerances quoted in the docs
/// (e.g. zero-mean kernels to 1e-9) assume `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 representable in scalar type")
    }

    /// Conversion from a pixel count or index.
    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Maps an angle into `[0, period)`.
pub fn wrap<T: Real>(angle: T, period: T) -> T {
    let r = angle % period;
    let r = if r < T::zero() { r + period } else { r };
    // `r + period` can round up to exactly `period` for tiny negative inputs.
    if r >= period {
        T::zero()
    } else {
        r
    }
}

/// Circular distance between two orientations (angles modulo π).
pub fn orientation_distance<T: Real>(a: T, b: T) -> T {
    let d = (a - b).abs() % T::PI();
    d.min(T::PI() - d)
}

/// Circular distance between two directions (angles modulo 2π).
pub fn direction_distance<T: Real>(a: T, b: T) -> T {
    let two_pi = T::PI() + T::PI();
    let d = (a - b).abs() % two_pi;
    d.min(two_pi - d)
}
