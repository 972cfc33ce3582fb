use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fill_from_valid;
use crate::error::{Error, Result};
use crate::raster::{FrequencyMap, GrayImage, Grid, OrientationField, SegmentationMask};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkeletonFrequencyParams {
    /// Length of the sampling line through each pixel.
    pub window_length: usize,
    /// Period used everywhere when no spacing can be measured at all.
    pub fallback_period: f64,
}

impl Default for SkeletonFrequencyParams {
    fn default() -> Self {
        Self {
            window_length: 64,
            fallback_period: 9.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkeletonFrequency<T> {
    pub map: FrequencyMap<T>,
    /// Foreground pixels with a direct spacing measurement.
    pub measured: usize,
    /// Foreground pixels filled from measured neighbors.
    pub interpolated: usize,
    /// True when nothing could be measured and the fallback period was used.
    pub fallback: bool,
}

const STEP: f64 = 0.25;
const MERGE_GAP: f64 = 1.0;

/// Positions (along the line) where it crosses skeleton pixels; runs of
/// consecutive hits collapse to their midpoint.
///
/// When the sampled pixel steps diagonally, both corner pixels are checked
/// as well: an 8-connected curve can otherwise slip between two samples.
fn crossings(skel: &Grid<bool>, cx: f64, cy: f64, nx: f64, ny: f64, half: f64) -> Vec<f64> {
    let n = (2.0 * half / STEP).round() as usize;
    let set = |x: isize, y: isize| skel.in_bounds(x, y) && skel.get(x as usize, y as usize);
    let mut out = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    let mut prev: Option<(isize, isize)> = None;
    for i in 0..=n {
        let t = -half + i as f64 * STEP;
        let (px, py) = ((cx + t * nx).round() as isize, (cy + t * ny).round() as isize);
        let mut hit = set(px, py);
        if let Some((qx, qy)) = prev {
            if qx != px && qy != py {
                hit |= set(qx, py) || set(px, qy);
            }
        }
        prev = Some((px, py));
        if hit {
            run = match run {
                Some((start, end)) if t - end <= MERGE_GAP => Some((start, t)),
                Some((start, end)) => {
                    out.push(0.5 * (start + end));
                    Some((t, t))
                }
                None => Some((t, t)),
            };
        }
    }
    if let Some((s, e)) = run {
        out.push(0.5 * (s + e));
    }
    out
}

/// Ridge frequency from a one-pixel skeleton (ridges white).
///
/// Each foreground pixel looks along the normal to its orientation over
/// `window_length` pixels; the reciprocal of the mean gap between
/// consecutive skeleton crossings is its frequency. Pixels with fewer than
/// two crossings are interpolated from measured neighbors.
pub fn frequency_from_skeleton<T: Real>(
    skeleton: &GrayImage,
    orient: &OrientationField<T>,
    mask: &SegmentationMask,
    params: &SkeletonFrequencyParams,
) -> Result<SkeletonFrequency<T>> {
    let (w, h) = skeleton.dims();
    orient.check_dims("orientation field", w, h)?;
    mask.check_dims("mask", w, h)?;
    mask.require_foreground()?;
    if !(params.fallback_period > 2.0) || params.window_length < 4 {
        return Err(Error::param("fallback_period must exceed 2 and window_length be ≥ 4"));
    }
    let skel = skeleton.map(|&p| p >= 128);
    if !skel.as_slice().iter().any(|&b| b) {
        return Err(Error::EmptySkeleton);
    }

    let half = params.window_length as f64 / 2.0;
    let measured: Vec<Option<f64>> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if !mask.get(x, y) {
                return None;
            }
            let (s, c) = orient.get(x, y).to_f64_lossy().sin_cos();
            let hits = crossings(&skel, x as f64, y as f64, s, c, half);
            if hits.len() < 2 {
                return None;
            }
            let spacing = (hits[hits.len() - 1] - hits[0]) / (hits.len() - 1) as f64;
            (spacing > 2.0).then(|| 1.0 / spacing)
        })
        .collect();

    let direct = measured.iter().filter(|m| m.is_some()).count();
    let fg = mask.foreground_count();
    if direct == 0 {
        let f = T::of(1.0 / params.fallback_period);
        return Ok(SkeletonFrequency {
            map: FrequencyMap::from_fn(w, h, |x, y| if mask.get(x, y) { f } else { T::zero() }),
            measured: 0,
            interpolated: 0,
            fallback: true,
        });
    }

    let mut values = Grid::from_vec(w, h, measured.iter().map(|m| m.unwrap_or(0.0)).collect())?;
    let mut valid = Grid::from_vec(w, h, measured.iter().map(Option::is_some).collect())?;
    fill_from_valid(&mut values, &mut valid);
    Ok(SkeletonFrequency {
        map: FrequencyMap::from_fn(w, h, |x, y| {
            if mask.get(x, y) {
                T::of(values.get(x, y))
            } else {
                T::zero()
            }
        }),
        measured: direct,
        interpolated: fg - direct,
        fallback: false,
    })
}
