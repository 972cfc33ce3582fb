//! Analytic test patterns: oriented sinusoids with known ridge geometry and
//! constructed skeletons.
//!
//! A sinusoid with frequency `f`, orientation `θ` and phase `φ0` has phase
//! `φ(x, y) = 2πf·(x sin θ + y cos θ) + φ0`; its ridges (dark in the
//! fingerprint image, bright in the indicator) are where `cos φ > 0`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::raster::{EnhancedImage, GrayImage, Grid};
use crate::scalar::Real;

pub fn phase(x: f64, y: f64, freq: f64, theta: f64, phase0: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq * (x * theta.sin() + y * theta.cos()) + phase0
}

/// Fingerprint-like pattern `mean − amplitude·cos φ` (dark ridges).
pub fn sinusoid(width: usize, height: usize, freq: f64, theta: f64, phase0: f64, mean: f64, amplitude: f64) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| {
        let v = mean - amplitude * phase(x as f64, y as f64, freq, theta, phase0).cos();
        v.round().clamp(0.0, 255.0) as u8
    })
}

/// Binary ridge indicator of [`sinusoid`]: 1 where `cos φ > 0`.
pub fn ridge_indicator<T: Real>(width: usize, height: usize, freq: f64, theta: f64, phase0: f64) -> EnhancedImage<T> {
    EnhancedImage::from_fn(width, height, |x, y| {
        if phase(x as f64, y as f64, freq, theta, phase0).cos() > 0.0 {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Phase of [`phase`] wound by `2π·k` around each defect `(x, y, k)`. Each
/// unit defect makes one ridge end (or fork) there, as a minutia does.
pub fn dislocated_phase(x: f64, y: f64, freq: f64, theta: f64, defects: &[(f64, f64, f64)]) -> f64 {
    defects
        .iter()
        .fold(phase(x, y, freq, theta, 0.0), |acc, &(dx, dy, k)| acc + k * (y - dy).atan2(x - dx))
}

/// Fingerprint-like pattern with minutiae at the given defects.
pub fn dislocated_sinusoid(
    width: usize,
    height: usize,
    freq: f64,
    theta: f64,
    defects: &[(f64, f64, f64)],
    mean: f64,
    amplitude: f64,
) -> GrayImage {
    GrayImage::from_fn(width, height, |x, y| {
        let v = mean - amplitude * dislocated_phase(x as f64, y as f64, freq, theta, defects).cos();
        v.round().clamp(0.0, 255.0) as u8
    })
}

/// Adds i.i.d. zero-mean Gaussian noise, clamping to `[0, 255]`.
pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, rng: &mut impl Rng) -> GrayImage {
    let normal = Normal::new(0.0, sigma).expect("valid noise sigma");
    GrayImage::from_grid(img.map(|&p| (p as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8))
}

/// White one-pixel vertical lines at `x ≡ offset (mod spacing)` on black.
pub fn vertical_lines(width: usize, height: usize, spacing: usize, offset: usize) -> GrayImage {
    GrayImage::from_fn(width, height, |x, _| if x % spacing == offset % spacing { 255 } else { 0 })
}

/// Sets the pixel if it lies inside the grid.
pub fn plot(grid: &mut Grid<u8>, x: isize, y: isize, v: u8) {
    if grid.in_bounds(x, y) {
        grid.set(x as usize, y as usize, v);
    }
}

/// 8-connected one-pixel digital line (Bresenham).
pub fn draw_line(img: &mut GrayImage, from: (isize, isize), to: (isize, isize), v: u8) {
    let (mut x0, mut y0) = from;
    let (x1, y1) = to;
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(img, x0, y0, v);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// 8-connected digital circle (midpoint algorithm).
pub fn draw_circle(img: &mut GrayImage, center: (isize, isize), radius: isize, v: u8) {
    let (cx, cy) = center;
    let mut x = radius;
    let mut y = 0;
    let mut err = 1 - radius;
    while x >= y {
        for &(px, py) in &[(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
            plot(img, cx + px, cy + py, v);
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
}

/// Concentric circles around `center` with radii `spacing, 2·spacing, …`.
pub fn concentric_circles(width: usize, height: usize, center: (isize, isize), spacing: isize) -> GrayImage {
    let mut img = GrayImage::filled(width, height, 0);
    let max_r = (width + height) as isize;
    let mut r = spacing;
    while r < max_r {
        draw_circle(&mut img, center, r, 255);
        r += spacing;
    }
    img
}
