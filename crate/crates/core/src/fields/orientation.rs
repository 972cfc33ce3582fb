use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{GrayImage, Grid, OrientationField, SegmentationMask};
use crate::scalar::{wrap, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrientationParams {
    /// Side of the square averaging window, odd and ≥ 3.
    pub gradient_window: usize,
    /// Pixels whose coherence falls below this are re-filled from the
    /// nearest coherent pixel.
    pub coherence_floor: f64,
}

impl Default for OrientationParams {
    fn default() -> Self {
        Self {
            gradient_window: 33,
            coherence_floor: 0.05,
        }
    }
}

impl OrientationParams {
    pub fn validate(&self) -> Result<()> {
        if self.gradient_window < 3 || self.gradient_window % 2 == 0 {
            return Err(Error::param("gradient_window must be odd and ≥ 3"));
        }
        if !(0.0..1.0).contains(&self.coherence_floor) {
            return Err(Error::param("coherence_floor must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OrientationEstimate<T> {
    pub field: OrientationField<T>,
    /// `|Σ(gx² − gy², 2gxgy)| / Σ(gx² + gy²)` per pixel, 0 where undefined.
    pub coherence: Grid<T>,
    /// Number of mask pixels whose angle was propagated from a neighbor.
    pub filled: usize,
}

/// Scharr derivatives with replicated borders.
fn gradients(image: &GrayImage) -> (Grid<f64>, Grid<f64>) {
    let (w, h) = image.dims();
    let p = |x: isize, y: isize| image.get_clamped(x, y) as f64;
    let gx = Grid::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        (3.0 * (p(x + 1, y - 1) - p(x - 1, y - 1))
            + 10.0 * (p(x + 1, y) - p(x - 1, y))
            + 3.0 * (p(x + 1, y + 1) - p(x - 1, y + 1)))
            / 32.0
    });
    let gy = Grid::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        (3.0 * (p(x - 1, y + 1) - p(x - 1, y - 1))
            + 10.0 * (p(x, y + 1) - p(x, y - 1))
            + 3.0 * (p(x + 1, y + 1) - p(x + 1, y - 1)))
            / 32.0
    });
    (gx, gy)
}

/// Summed-area table with a leading zero row and column.
struct Integral {
    w: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(src: &Grid<f64>) -> Self {
        let (w, h) = src.dims();
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut run = 0.0;
            for x in 0..w {
                run += src.get(x, y);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + run;
            }
        }
        Self { w, data }
    }

    /// Sum over the inclusive rectangle `[x0, x1] × [y0, y1]`.
    fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.w + 1;
        self.data[(y1 + 1) * s + x1 + 1] - self.data[y0 * s + x1 + 1] - self.data[(y1 + 1) * s + x0]
            + self.data[y0 * s + x0]
    }
}

/// Squared-gradient orientation estimate.
///
/// Gradient moments of mask pixels are averaged over a square window in
/// double-angle form; the ridge orientation is perpendicular to the mean
/// gradient. Low-coherence pixels take the angle of the nearest coherent
/// pixel (breadth-first over the whole grid). A mask without any coherent
/// pixel, e.g. a constant image, is an error.
pub fn estimate_orientation<T: Real>(
    image: &GrayImage,
    mask: &SegmentationMask,
    params: &OrientationParams,
) -> Result<OrientationEstimate<T>> {
    params.validate()?;
    let (w, h) = image.dims();
    mask.check_dims("mask", w, h)?;
    mask.require_foreground()?;

    let (gx, gy) = gradients(image);
    let m = |x: usize, y: usize| if mask.get(x, y) { 1.0 } else { 0.0 };
    let gxx = Integral::new(&Grid::from_fn(w, h, |x, y| {
        m(x, y) * (gx.get(x, y).powi(2) - gy.get(x, y).powi(2))
    }));
    let gxy = Integral::new(&Grid::from_fn(w, h, |x, y| 2.0 * m(x, y) * gx.get(x, y) * gy.get(x, y)));
    let gee = Integral::new(&Grid::from_fn(w, h, |x, y| {
        m(x, y) * (gx.get(x, y).powi(2) + gy.get(x, y).powi(2))
    }));

    let r = params.gradient_window / 2;
    let mut angle = Grid::filled(w, h, T::zero());
    let mut coherence = Grid::filled(w, h, T::zero());
    let mut coherent = Grid::filled(w, h, false);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
            let sxx = gxx.sum(x0, y0, x1, y1);
            let sxy = gxy.sum(x0, y0, x1, y1);
            let see = gee.sum(x0, y0, x1, y1);
            let mag = sxx.hypot(sxy);
            // relative floor guards against cancellation noise in the tables
            if see <= 1e-9 || mag <= 1e-12 * see.max(1.0) {
                continue;
            }
            let c = (mag / see).min(1.0);
            coherence.set(x, y, T::of(c));
            if c >= params.coherence_floor {
                let theta = std::f64::consts::FRAC_PI_2 - 0.5 * sxy.atan2(sxx);
                angle.set(x, y, wrap(T::of(theta), T::PI()));
                coherent.set(x, y, true);
            }
        }
    }

    let mut queue: VecDeque<usize> = (0..w * h).filter(|&i| coherent.as_slice()[i]).collect();
    if queue.is_empty() {
        return Err(Error::NoCoherentOrientation);
    }
    let mut reached = coherent.clone();
    let mut filled = 0;
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let a = angle.as_slice()[i];
        for (dx, dy) in [(0isize, -1isize), (-1, 0), (1, 0), (0, 1)] {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if !reached.in_bounds(nx, ny) {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if !reached.as_slice()[j] {
                reached.as_mut_slice()[j] = true;
                angle.as_mut_slice()[j] = a;
                if mask.as_slice()[j] {
                    filled += 1;
                }
                queue.push_back(j);
            }
        }
    }

    Ok(OrientationEstimate {
        field: OrientationField::from_grid_unchecked(angle),
        coherence,
        filled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::orientation_distance;
    use crate::synthetic::sinusoid;
    use std::f64::consts::PI;

    fn max_interior_error(theta: f64, period: f64) -> f64 {
        let (w, h) = (96, 96);
        let img = sinusoid(w, h, 1.0 / period, theta, 0.4, 128.0, 100.0);
        let mask = SegmentationMask::full(w, h);
        let est = estimate_orientation::<f64>(&img, &mask, &OrientationParams::default()).unwrap();
        let mut worst: f64 = 0.0;
        for y in 17..h - 17 {
            for x in 17..w - 17 {
                worst = worst.max(orientation_distance(est.field.get(x, y), theta));
            }
        }
        worst
    }

    #[test]
    fn vertical_ridges() {
        // I = 128 + 100 cos(2πx/9): same geometry as the θ = π/2 sinusoid
        let img = GrayImage::from_fn(96, 96, |x, _| {
            (128.0 + 100.0 * (2.0 * PI * x as f64 / 9.0).cos()).round() as u8
        });
        let est = estimate_orientation::<f64>(&img, &SegmentationMask::full(96, 96), &OrientationParams::default()).unwrap();
        for y in 17..79 {
            for x in 17..79 {
                assert!(orientation_distance(est.field.get(x, y), PI / 2.0) < 2f64.to_radians());
            }
        }
    }

    #[test]
    fn rotated_pattern_shifts_estimate() {
        let base = PI / 2.0;
        let rotated = base + PI / 6.0;
        assert!(max_interior_error(base, 9.0) < 3f64.to_radians());
        assert!(max_interior_error(rotated, 9.0) < 3f64.to_radians());
    }

    #[test]
    fn equivariance_over_angles_and_periods() {
        for period in [5.0, 9.0, 13.0] {
            for k in 0..12 {
                let theta = k as f64 * PI / 12.0 + 0.05;
                let err = max_interior_error(theta, period);
                assert!(err < 3f64.to_radians(), "θ={theta} p={period}: {}°", err.to_degrees());
            }
        }
    }

    #[test]
    fn constant_image_has_no_orientation() {
        let img = GrayImage::filled(40, 40, 90);
        let r = estimate_orientation::<f64>(&img, &SegmentationMask::full(40, 40), &OrientationParams::default());
        assert!(matches!(r, Err(Error::NoCoherentOrientation)));
    }

    #[test]
    fn low_coherence_is_filled_from_neighbors() {
        // left half striped, right half flat: the flat part inherits the stripes
        let img = GrayImage::from_fn(120, 40, |x, _| {
            if x < 40 {
                (128.0 + 100.0 * (2.0 * PI * x as f64 / 8.0).cos()) as u8
            } else {
                128
            }
        });
        let est = estimate_orientation::<f64>(&img, &SegmentationMask::full(120, 40), &OrientationParams::default()).unwrap();
        assert!(est.filled > 0);
        assert!(orientation_distance(est.field.get(110, 20), PI / 2.0) < 1e-9);
        assert_eq!(est.coherence.get(110, 20), 0.0);
    }

    #[test]
    fn errors() {
        let img = GrayImage::filled(10, 10, 0);
        assert!(estimate_orientation::<f64>(&img, &SegmentationMask::empty(10, 10), &OrientationParams::default()).is_err());
        assert!(estimate_orientation::<f64>(&img, &SegmentationMask::full(10, 9), &OrientationParams::default()).is_err());
        let bad = OrientationParams { gradient_window: 4, ..Default::default() };
        assert!(estimate_orientation::<f64>(&img, &SegmentationMask::full(10, 10), &bad).is_err());
    }
}
