//! Orientation and frequency fields.
//!
//! Both estimators here are classical: squared-gradient averaging for
//! orientation and oriented-window x-signatures for frequency. Externally
//! produced fields can be loaded through the `OFD1`/`FQM1` codecs instead.

mod double_angle;
mod fill;
mod frequency;
mod orientation;
mod skeleton;

pub use double_angle::{double_angle_decode, double_angle_encode};
pub use fill::fill_from_valid;
pub use frequency::{estimate_frequency, FrequencyParams};
pub use orientation::{estimate_orientation, OrientationParams, OrientationEstimate};
pub use skeleton::{frequency_from_skeleton, SkeletonFrequency, SkeletonFrequencyParams};

use crate::raster::Grid;
use crate::scalar::Real;

/// Bilinear sample with border replication.
pub(crate) fn bilinear<T: Real>(g: &Grid<T>, x: T, y: T) -> T {
    let (w, h) = g.dims();
    let xf = x.max(T::zero()).min(T::of_usize(w - 1));
    let yf = y.max(T::zero()).min(T::of_usize(h - 1));
    let x0 = xf.floor().to_usize().unwrap_or(0);
    let y0 = yf.floor().to_usize().unwrap_or(0);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let ax = xf - T::of_usize(x0);
    let ay = yf - T::of_usize(y0);
    let top = g.get(x0, y0) * (T::one() - ax) + g.get(x1, y0) * ax;
    let bottom = g.get(x0, y1) * (T::one() - ax) + g.get(x1, y1) * ax;
    top * (T::one() - ay) + bottom * ay
}
