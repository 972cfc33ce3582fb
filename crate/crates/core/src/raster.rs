//! Raster and field types shared by every stage of the pipeline.
//!
//! All rasters are row-major with the origin at the top-left pixel; `x` grows
//! to the right and `y` grows downward. Angles are measured counterclockwise
//! as seen on screen, i.e. with the y axis pointing up: a ridge with
//! orientation `θ` runs along the image-space vector `(cos θ, −sin θ)`.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::scalar::{wrap, Real};

/// Dense row-major 2-D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<V> {
    width: usize,
    height: usize,
    data: Vec<V>,
}

impl<V> Grid<V> {
    pub fn from_vec(width: usize, height: usize, data: Vec<V>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let expected = width
            .checked_mul(height)
            .ok_or(Error::InvalidDimensions { width, height })?;
        if data.len() != expected {
            return Err(Error::LengthMismatch(format!(
                "buffer holds {} values, {width}x{height} needs {expected}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> V) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<V> {
        self.data
    }

    #[inline]
    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn row(&self, y: usize) -> &[V] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U>(&self, f: impl FnMut(&V) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub(crate) fn check_dims(&self, what: &'static str, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::DimensionMismatch {
                what,
                got_w: self.width,
                got_h: self.height,
                want_w: width,
                want_h: height,
            });
        }
        Ok(())
    }
}

impl<V: Clone> Grid<V> {
    pub fn filled(width: usize, height: usize, value: V) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<V: Copy> Grid<V> {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> V {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: V) {
        self.data[y * self.width + x] = v;
    }

    /// Border-replicating accessor.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> V {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }
}

macro_rules! grid_newtype {
    ($(#[$meta:meta])* $name:ident, $v:ty) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Grid<$v>);

        impl $name {
            pub fn from_grid(grid: Grid<$v>) -> Self {
                Self(grid)
            }

            pub fn into_grid(self) -> Grid<$v> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = Grid<$v>;
            fn deref(&self) -> &Grid<$v> {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut Grid<$v> {
                &mut self.0
            }
        }
    };
    ($(#[$meta:meta])* $name:ident<T>) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T>(Grid<T>);

        impl<T> $name<T> {
            pub fn into_grid(self) -> Grid<T> {
                self.0
            }
        }

        impl<T> Deref for $name<T> {
            type Target = Grid<T>;
            fn deref(&self) -> &Grid<T> {
                &self.0
            }
        }

        impl<T> DerefMut for $name<T> {
            fn deref_mut(&mut self) -> &mut Grid<T> {
                &mut self.0
            }
        }
    };
}

grid_newtype!(
    /// 8-bit grayscale raster, 0 = black, 255 = white.
    GrayImage,
    u8
);

grid_newtype!(
    /// Foreground flags (`true` = foreground).
    SegmentationMask,
    bool
);

grid_newtype!(
    /// Per-pixel ridge orientation in `[0, π)`.
    OrientationField<T>
);

grid_newtype!(
    /// Per-pixel ridge frequency in cycles/pixel; 0 on background.
    FrequencyMap<T>
);

grid_newtype!(
    /// Enhanced image with values in `[0, 1]`, 1 = ridge (white).
    EnhancedImage<T>
);

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        Grid::from_vec(width, height, pixels).map(Self)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self(Grid::filled(width, height, value))
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> u8) -> Self {
        Self(Grid::from_fn(width, height, f))
    }
}

impl SegmentationMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Result<Self> {
        Grid::from_vec(width, height, flags).map(Self)
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self(Grid::filled(width, height, true))
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self(Grid::filled(width, height, false))
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> bool) -> Self {
        Self(Grid::from_fn(width, height, f))
    }

    pub fn foreground_count(&self) -> usize {
        self.as_slice().iter().filter(|&&f| f).count()
    }

    pub fn has_foreground(&self) -> bool {
        self.as_slice().iter().any(|&f| f)
    }

    pub(crate) fn require_foreground(&self) -> Result<()> {
        if self.has_foreground() {
            Ok(())
        } else {
            Err(Error::EmptyMask)
        }
    }

    /// Foreground test for a real-valued position (rounded to the nearest pixel).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (xi, yi) = (x.round(), y.round());
        if !xi.is_finite() || !yi.is_finite() {
            return false;
        }
        let (xi, yi) = (xi as isize, yi as isize);
        self.in_bounds(xi, yi) && self.get(xi as usize, yi as usize)
    }

    /// Pixel-wise intersection of two masks of equal size.
    pub fn and(&self, other: &SegmentationMask) -> Result<SegmentationMask> {
        other.check_dims("mask", self.width(), self.height())?;
        Ok(Self::from_fn(self.width(), self.height(), |x, y| {
            self.get(x, y) && other.get(x, y)
        }))
    }
}

impl<T: Real> OrientationField<T> {
    /// Builds a field, wrapping every angle into `[0, π)`.
    pub fn new(width: usize, height: usize, angles: Vec<T>) -> Result<Self> {
        let mut grid = Grid::from_vec(width, height, angles)?;
        for a in grid.as_mut_slice() {
            if !a.is_finite() {
                return Err(Error::param("orientation angles must be finite"));
            }
            *a = wrap(*a, T::PI());
        }
        Ok(Self(grid))
    }

    pub fn constant(width: usize, height: usize, theta: T) -> Self {
        Self(Grid::filled(width, height, wrap(theta, T::PI())))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        Self(Grid::from_fn(width, height, |x, y| wrap(f(x, y), T::PI())))
    }

    /// Wraps a grid without touching its values; callers guarantee the range.
    pub(crate) fn from_grid_unchecked(grid: Grid<T>) -> Self {
        Self(grid)
    }
}

impl<T: Real> FrequencyMap<T> {
    pub fn new(width: usize, height: usize, freqs: Vec<T>) -> Result<Self> {
        let grid = Grid::from_vec(width, height, freqs)?;
        if grid.as_slice().iter().any(|f| !f.is_finite() || *f < T::zero()) {
            return Err(Error::param("frequencies must be finite and non-negative"));
        }
        Ok(Self(grid))
    }

    pub fn constant(width: usize, height: usize, freq: T) -> Self {
        Self(Grid::filled(width, height, freq))
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> T) -> Self {
        Self(Grid::from_fn(width, height, f))
    }

    /// Checks the foreground contract: every foreground value in `(0, 0.5)`.
    pub fn validate_on(&self, mask: &SegmentationMask) -> Result<()> {
        mask.check_dims("mask", self.width(), self.height())?;
        let half = T::of(0.5);
        for (i, (&f, &m)) in self.as_slice().iter().zip(mask.as_slice()).enumerate() {
            if m && !(f > T::zero() && f < half) {
                return Err(Error::param(format!(
                    "frequency {f} at ({}, {}) outside (0, 0.5)",
                    i % self.width(),
                    i / self.width()
                )));
            }
        }
        Ok(())
    }
}

impl<T: Real> EnhancedImage<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        let grid = Grid::from_vec(width, height, values)?;
        if grid
            .as_slice()
            .iter()
            .any(|v| !(*v >= T::zero() && *v <= T::one()))
        {
            return Err(Error::param("enhanced values must lie in [0, 1]"));
        }
        Ok(Self(grid))
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        Self(Grid::from_fn(width, height, |x, y| {
            f(x, y).max(T::zero()).min(T::one())
        }))
    }

    pub(crate) fn from_grid_unchecked(grid: Grid<T>) -> Self {
        Self(grid)
    }

    /// Quantizes to 8 bits (1 → 255).
    pub fn to_gray(&self) -> GrayImage {
        GrayImage(self.map(|v| {
            (v.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8
        }))
    }

    /// Inverse of [`EnhancedImage::to_gray`].
    pub fn from_gray(img: &GrayImage) -> Self {
        Self(img.map(|&p| T::of(p as f64 / 255.0)))
    }
}

/// Minutia kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MinutiaKind {
    Ending,
    Bifurcation,
}

impl MinutiaKind {
    pub fn code(self) -> char {
        match self {
            MinutiaKind::Ending => 'E',
            MinutiaKind::Bifurcation => 'B',
        }
    }
}

/// A ridge ending or bifurcation. `direction` is in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minutia {
    pub x: f64,
    pub y: f64,
    pub direction: f64,
    pub kind: MinutiaKind,
}

impl Minutia {
    /// Builds a minutia, normalizing the direction into `[0, 2π)`.
    pub fn new(x: f64, y: f64, direction: f64, kind: MinutiaKind) -> Self {
        Self {
            x,
            y,
            direction: wrap(direction, 2.0 * std::f64::consts::PI),
            kind,
        }
    }

    pub fn distance(&self, other: &Minutia) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub type MinutiaSet = Vec<Minutia>;
