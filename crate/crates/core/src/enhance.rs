//! Contextual Gabor filtering.
//!
//! Every foreground pixel is correlated with the bank entry nearest to its
//! local orientation and frequency. Two interchangeable evaluation
//! strategies exist: a per-pixel reference loop and a grouped strategy that
//! sweeps each kernel over horizontal runs of pixels sharing it. Both
//! accumulate taps in the same order and agree to rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gabor::GaborBank;
use crate::raster::{EnhancedImage, FrequencyMap, GrayImage, Grid, OrientationField, SegmentationMask};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// 1 where the response is strictly positive, else 0.
    #[default]
    Binary,
    /// Responses min-max normalized to `[0, 1]` over the foreground.
    Response,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Naive,
    #[default]
    Grouped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EnhanceOptions {
    pub mode: OutputMode,
    pub strategy: Strategy,
}

const BACKGROUND: u16 = u16::MAX;

fn check_inputs<T: Real>(
    width: usize,
    height: usize,
    mask: &SegmentationMask,
    orient: &OrientationField<T>,
    freq: &FrequencyMap<T>,
    bank: &GaborBank<T>,
) -> Result<()> {
    mask.check_dims("mask", width, height)?;
    orient.check_dims("orientation field", width, height)?;
    freq.check_dims("frequency map", width, height)?;
    mask.require_foreground()?;
    assert!(bank.len() < BACKGROUND as usize, "bank too large");
    Ok(())
}

/// Bank index per pixel, `u16::MAX` on background.
pub fn assign_filters<T: Real>(
    mask: &SegmentationMask,
    orient: &OrientationField<T>,
    freq: &FrequencyMap<T>,
    bank: &GaborBank<T>,
) -> Grid<u16> {
    let (w, h) = mask.dims();
    Grid::from_fn(w, h, |x, y| {
        if mask.get(x, y) {
            bank.select(orient.get(x, y), freq.get(x, y)) as u16
        } else {
            BACKGROUND
        }
    })
}

/// Intensity inversion that turns dark ridges into bright ones.
pub fn inverted<T: Real>(img: &GrayImage) -> Grid<T> {
    img.map(|&p| T::of(255.0 - p as f64))
}

pub fn as_real<T: Real>(img: &GrayImage) -> Grid<T> {
    img.map(|&p| T::of(p as f64))
}

fn naive<T: Real>(input: &Grid<T>, assignment: &Grid<u16>, bank: &GaborBank<T>) -> Grid<T> {
    let (w, h) = input.dims();
    let mut out = Grid::filled(w, h, T::zero());
    for y in 0..h {
        for x in 0..w {
            let idx = assignment.get(x, y);
            if idx == BACKGROUND {
                continue;
            }
            let k = bank.kernel(idx as usize);
            let r = k.radius() as isize;
            let mut acc = T::zero();
            for dy in -r..=r {
                for dx in -r..=r {
                    acc += k.at(dx, dy) * input.get_clamped(x as isize + dx, y as isize + dy);
                }
            }
            out.set(x, y, acc);
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Run {
    y: usize,
    x0: usize,
    len: usize,
}

fn grouped<T: Real>(input: &Grid<T>, assignment: &Grid<u16>, bank: &GaborBank<T>) -> Grid<T> {
    let (w, h) = input.dims();
    let pad = bank.max_radius();
    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    let mut padded = vec![T::zero(); pw * ph];
    for (py, row) in padded.chunks_exact_mut(pw).enumerate() {
        let y = py as isize - pad as isize;
        for (px, v) in row.iter_mut().enumerate() {
            *v = input.get_clamped(px as isize - pad as isize, y);
        }
    }

    let mut runs: Vec<Vec<Run>> = vec![Vec::new(); bank.len()];
    for y in 0..h {
        let row = assignment.row(y);
        let mut x = 0;
        while x < w {
            let idx = row[x];
            let x0 = x;
            while x < w && row[x] == idx {
                x += 1;
            }
            if idx != BACKGROUND {
                runs[idx as usize].push(Run { y, x0, len: x - x0 });
            }
        }
    }

    let pieces: Vec<(Run, Vec<T>)> = runs
        .par_iter()
        .enumerate()
        .filter(|(_, r)| !r.is_empty())
        .flat_map_iter(|(idx, group)| {
            let k = bank.kernel(idx);
            let r = k.radius();
            let size = k.size();
            let padded = &padded;
            group.iter().map(move |run| {
                let mut acc = vec![T::zero(); run.len];
                for ky in 0..size {
                    let prow = &padded[(run.y + pad + ky - r) * pw..][..pw];
                    let krow = &k.weights()[ky * size..(ky + 1) * size];
                    for (kx, &wt) in krow.iter().enumerate() {
                        let src = &prow[run.x0 + pad + kx - r..][..run.len];
                        for (a, &p) in acc.iter_mut().zip(src) {
                            *a += wt * p;
                        }
                    }
                }
                (*run, acc)
            })
        })
        .collect();

    let mut out = Grid::filled(w, h, T::zero());
    let slice = out.as_mut_slice();
    for (run, vals) in pieces {
        slice[run.y * w + run.x0..][..run.len].copy_from_slice(&vals);
    }
    out
}

/// Raw filter responses of `input` (already in ridges-bright polarity);
/// background pixels are 0. Borders are replicate-padded.
pub fn contextual_responses<T: Real>(
    input: &Grid<T>,
    mask: &SegmentationMask,
    orient: &OrientationField<T>,
    freq: &FrequencyMap<T>,
    bank: &GaborBank<T>,
    strategy: Strategy,
) -> Result<Grid<T>> {
    let (w, h) = input.dims();
    check_inputs(w, h, mask, orient, freq, bank)?;
    let assignment = assign_filters(mask, orient, freq, bank);
    Ok(match strategy {
        Strategy::Naive => naive(input, &assignment, bank),
        Strategy::Grouped => grouped(input, &assignment, bank),
    })
}

/// Converts raw responses into an enhanced image.
pub fn finalize<T: Real>(responses: &Grid<T>, mask: &SegmentationMask, mode: OutputMode) -> EnhancedImage<T> {
    let (w, h) = responses.dims();
    let grid = match mode {
        OutputMode::Binary => Grid::from_fn(w, h, |x, y| {
            if mask.get(x, y) && responses.get(x, y) > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        }),
        OutputMode::Response => {
            let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
            for (&r, &m) in responses.as_slice().iter().zip(mask.as_slice()) {
                if m {
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
            let span = hi - lo;
            Grid::from_fn(w, h, |x, y| {
                if mask.get(x, y) && span > T::zero() {
                    ((responses.get(x, y) - lo) / span).max(T::zero()).min(T::one())
                } else {
                    T::zero()
                }
            })
        }
    };
    EnhancedImage::from_grid_unchecked(grid)
}

/// Enhances a fingerprint (dark ridges on a light background) into an
/// image with white ridges and black valleys.
pub fn enhance_gbfen<T: Real>(
    image: &GrayImage,
    mask: &SegmentationMask,
    orient: &OrientationField<T>,
    freq: &FrequencyMap<T>,
    bank: &GaborBank<T>,
    opts: EnhanceOptions,
) -> Result<EnhancedImage<T>> {
    let responses = contextual_responses(&inverted(image), mask, orient, freq, bank, opts.strategy)?;
    Ok(finalize(&responses, mask, opts.mode))
}

/// Renders a ground-truth enhanced image from a white-on-black ridge skeleton.
pub fn gt_enhance<T: Real>(
    skeleton: &GrayImage,
    orient: &OrientationField<T>,
    freq: &FrequencyMap<T>,
    mask: &SegmentationMask,
    bank: &GaborBank<T>,
) -> Result<EnhancedImage<T>> {
    gt_enhance_with(skeleton, orient, freq, mask, bank, EnhanceOptions::default())
}

pub fn gt_enhance_with<T: Real>(
    skeleton: &GrayImage,
    orient: &OrientationField<T>,
    freq: &FrequencyMap<T>,
    mask: &SegmentationMask,
    bank: &GaborBank<T>,
    opts: EnhanceOptions,
) -> Result<EnhancedImage<T>> {
    let responses = contextual_responses(&as_real(skeleton), mask, orient, freq, bank, opts.strategy)?;
    Ok(finalize(&responses, mask, opts.mode))
}
