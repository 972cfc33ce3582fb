use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bilinear, fill_from_valid};
use crate::error::{Error, Result};
use crate::raster::{FrequencyMap, GrayImage, Grid, OrientationField, SegmentationMask};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyParams {
    /// Length of the oriented window, measured across the ridges.
    pub window_length: usize,
    /// Extent of the window along the ridges (samples averaged per bin).
    pub window_width: usize,
    pub min_period: f64,
    pub max_period: f64,
    /// Spacing of the window centers; the dense map is interpolated between them.
    pub block_step: usize,
}

impl Default for FrequencyParams {
    fn default() -> Self {
        Self {
            window_length: 64,
            window_width: 16,
            min_period: 5.0,
            max_period: 13.0,
            block_step: 8,
        }
    }
}

impl FrequencyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_period >= 2.0 && self.min_period < self.max_period && self.max_period.is_finite()) {
            return Err(Error::param("periods must satisfy 2 ≤ min_period < max_period"));
        }
        if (self.window_length as f64) < 2.0 * self.max_period {
            return Err(Error::param("window_length must be ≥ 2 × max_period"));
        }
        if self.window_width == 0 || self.block_step == 0 {
            return Err(Error::param("window_width and block_step must be positive"));
        }
        Ok(())
    }
}

/// Sub-pixel positions of the local maxima of `sig` lying above its mean.
fn peaks(sig: &[f64]) -> Vec<f64> {
    let mean = sig.iter().sum::<f64>() / sig.len() as f64;
    let mut out = Vec::new();
    for k in 1..sig.len() - 1 {
        let (a, b, c) = (sig[k - 1], sig[k], sig[k + 1]);
        if b > a && b >= c && b > mean {
            let denom = a - 2.0 * b + c;
            let off = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            out.push(k as f64 + off.clamp(-0.5, 0.5));
        }
    }
    out
}

/// Mean ridge period read off an x-signature from both its peaks and its
/// troughs, or `None` when fewer than two extrema of either kind exist.
pub(crate) fn signature_period(sig: &[f64]) -> Option<f64> {
    let smooth: Vec<f64> = (0..sig.len())
        .map(|k| {
            let a = sig[k.saturating_sub(1)];
            let c = sig[(k + 1).min(sig.len() - 1)];
            0.25 * a + 0.5 * sig[k] + 0.25 * c
        })
        .collect();
    let neg: Vec<f64> = smooth.iter().map(|v| -v).collect();
    let mut span = 0.0;
    let mut gaps = 0usize;
    for p in [peaks(&smooth), peaks(&neg)] {
        if p.len() >= 2 {
            span += p[p.len() - 1] - p[0];
            gaps += p.len() - 1;
        }
    }
    (gaps > 0).then(|| span / gaps as f64)
}

/// Oriented x-signature at `(cx, cy)`: intensities averaged along the ridge
/// direction, sampled at unit steps along the normal.
fn x_signature(img: &Grid<f64>, cx: f64, cy: f64, theta: f64, length: usize, width: usize) -> Vec<f64> {
    // normal (across ridges) and tangent (along ridges) in image coordinates
    let (s, c) = theta.sin_cos();
    let (nx, ny) = (s, c);
    let (tx, ty) = (c, -s);
    let l0 = (length as f64 - 1.0) / 2.0;
    let w0 = (width as f64 - 1.0) / 2.0;
    (0..length)
        .map(|k| {
            let u = k as f64 - l0;
            let mut acc = 0.0;
            for d in 0..width {
                let v = d as f64 - w0;
                acc += bilinear(img, cx + u * nx + v * tx, cy + u * ny + v * ty);
            }
            acc / width as f64
        })
        .collect()
}

/// Ridge frequency from oriented-window x-signatures.
///
/// Windows are centered on a lattice with spacing `block_step`; windows
/// whose center is foreground and whose period falls inside
/// `[min_period, max_period]` are valid, the rest are filled from valid
/// neighbors. The lattice is bilinearly interpolated to every pixel and
/// clamped to `[1/max_period, 1/min_period]`; background is 0.
pub fn estimate_frequency<T: Real>(
    image: &GrayImage,
    mask: &SegmentationMask,
    orient: &OrientationField<T>,
    params: &FrequencyParams,
) -> Result<FrequencyMap<T>> {
    params.validate()?;
    let (w, h) = image.dims();
    mask.check_dims("mask", w, h)?;
    orient.check_dims("orientation field", w, h)?;
    mask.require_foreground()?;

    let img = image.map(|&p| p as f64);
    let step = params.block_step;
    let bw = w.div_ceil(step);
    let bh = h.div_ceil(step);
    let center = |b: usize, n: usize| (b * step + step / 2).min(n - 1);

    let cells: Vec<Option<f64>> = (0..bw * bh)
        .into_par_iter()
        .map(|i| {
            let (cx, cy) = (center(i % bw, w), center(i / bw, h));
            if !mask.get(cx, cy) {
                return None;
            }
            let theta = orient.get(cx, cy).to_f64_lossy();
            let sig = x_signature(&img, cx as f64, cy as f64, theta, params.window_length, params.window_width);
            signature_period(&sig).filter(|p| (params.min_period..=params.max_period).contains(p))
        })
        .collect();

    let mut valid = Grid::from_vec(bw, bh, cells.iter().map(Option::is_some).collect())?;
    if !valid.as_slice().iter().any(|&v| v) {
        return Err(Error::NoRidgeSpacing);
    }
    let mut freq = Grid::from_vec(bw, bh, cells.iter().map(|c| c.map_or(0.0, |p| 1.0 / p)).collect())?;
    fill_from_valid(&mut freq, &mut valid);

    let (lo, hi) = (1.0 / params.max_period, 1.0 / params.min_period);
    let half = (step / 2) as f64;
    Ok(FrequencyMap::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return T::zero();
        }
        let gx = (x as f64 - half) / step as f64;
        let gy = (y as f64 - half) / step as f64;
        T::of(bilinear(&freq, gx, gy).clamp(lo, hi))
    }))
}
