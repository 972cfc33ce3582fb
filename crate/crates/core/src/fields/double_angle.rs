use crate::error::{Error, Result};
use crate::raster::{Grid, OrientationField, SegmentationMask};
use crate::scalar::{wrap, Real};

/// `θ ↦ (cos 2θ, sin 2θ)`: identifies `θ` with `θ + π` so that orientations
/// can be averaged.
pub fn double_angle_encode<T: Real>(field: &OrientationField<T>) -> (Grid<T>, Grid<T>) {
    let two = T::of(2.0);
    (field.map(|&t| (two * t).cos()), field.map(|&t| (two * t).sin()))
}

/// Inverse of [`double_angle_encode`]; the vector need not be unit length.
///
/// A zero vector is an error on foreground pixels (all pixels when `mask`
/// is `None`) and decodes to 0 elsewhere.
pub fn double_angle_decode<T: Real>(
    x: &Grid<T>,
    y: &Grid<T>,
    mask: Option<&SegmentationMask>,
) -> Result<OrientationField<T>> {
    let (w, h) = x.dims();
    y.check_dims("double-angle sine map", w, h)?;
    if let Some(m) = mask {
        m.check_dims("mask", w, h)?;
    }
    let mut out = Vec::with_capacity(w * h);
    for (i, (&c, &s)) in x.as_slice().iter().zip(y.as_slice()).enumerate() {
        if c == T::zero() && s == T::zero() {
            if mask.map_or(true, |m| m.as_slice()[i]) {
                return Err(Error::UndefinedOrientation { x: i % w, y: i / w });
            }
            out.push(T::zero());
        } else {
            out.push(wrap(s.atan2(c) / T::of(2.0), T::PI()));
        }
    }
    Ok(OrientationField::from_grid_unchecked(Grid::from_vec(w, h, out)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_values() {
        let f = OrientationField::new(3, 1, vec![0.0, PI / 4.0, PI / 2.0]).unwrap();
        let (c, s) = double_angle_encode(&f);
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)];
        for (i, (ec, es)) in expect.iter().enumerate() {
            assert!((c.as_slice()[i] - ec).abs() < 1e-15);
            assert!((s.as_slice()[i] - es).abs() < 1e-15);
            let r = c.as_slice()[i].hypot(s.as_slice()[i]);
            assert!((r - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn decode_examples() {
        let c = Grid::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        let s = Grid::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let f = double_angle_decode(&c, &s, None).unwrap();
        assert_eq!(f.get(0, 0), 0.0);
        assert!((f.get(1, 0) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector() {
        let c = Grid::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let s = Grid::from_vec(2, 1, vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            double_angle_decode(&c, &s, None),
            Err(Error::UndefinedOrientation { x: 0, y: 0 })
        ));
        let bg = SegmentationMask::new(2, 1, vec![false, true]).unwrap();
        assert_eq!(double_angle_decode(&c, &s, Some(&bg)).unwrap().get(0, 0), 0.0);
    }

    #[test]
    fn roundtrip_grid() {
        let n = 10_000;
        let f = OrientationField::from_fn(n, 1, |x, _| x as f64 * PI / n as f64);
        let (c, s) = double_angle_encode(&f);
        let back = double_angle_decode(&c, &s, None).unwrap();
        for (a, b) in f.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
