use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{EnhancedImage, SegmentationMask};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TverskyParams {
    pub alpha: f64,
}

impl Default for TverskyParams {
    fn default() -> Self {
        Self { alpha: 0.7 }
    }
}

impl TverskyParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Soft agreement sums over the foreground.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TverskyParts {
    /// Σ E·Ê·S
    pub tra: f64,
    /// Σ E·(1−Ê)·S
    pub fra: f64,
    /// Σ (1−E)·Ê·S
    pub fva: f64,
    /// Σ Ê·S
    pub predicted_mass: f64,
}

pub fn tversky_parts<T: Real>(e: &EnhancedImage<T>, e_hat: &EnhancedImage<T>, mask: &SegmentationMask) -> Result<TverskyParts> {
    let (w, h) = e.dims();
    e_hat.check_dims("predicted image", w, h)?;
    mask.check_dims("mask", w, h)?;
    mask.require_foreground()?;
    let mut p = TverskyParts::default();
    for ((&a, &b), &s) in e.as_slice().iter().zip(e_hat.as_slice()).zip(mask.as_slice()) {
        if !s {
            continue;
        }
        let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
        p.tra += a * b;
        p.fra += a * (1.0 - b);
        p.fva += (1.0 - a) * b;
        p.predicted_mass += b;
    }
    Ok(p)
}

/// `1 − TRA / (TRA + α·FRA + (1−α)·FVA)`. With a zero denominator the loss
/// is 1 if `Ê` carries ridge mass on the foreground and 0 otherwise.
pub fn tversky_from_parts(parts: &TverskyParts, alpha: f64) -> f64 {
    let den = parts.tra + alpha * parts.fra + (1.0 - alpha) * parts.fva;
    if den <= 0.0 {
        return if parts.predicted_mass > 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - parts.tra / den).clamp(0.0, 1.0)
}

pub fn tversky_loss<T: Real>(
    e: &EnhancedImage<T>,
    e_hat: &EnhancedImage<T>,
    mask: &SegmentationMask,
    params: &TverskyParams,
) -> Result<f64> {
    params.validate()?;
    Ok(tversky_from_parts(&tversky_parts(e, e_hat, mask)?, params.alpha))
}

/// `1 − tversky_loss`.
pub fn tversky_similarity<T: Real>(e: &EnhancedImage<T>, e_hat: &EnhancedImage<T>, mask: &SegmentationMask, alpha: f64) -> Result<f64> {
    Ok(1.0 - tversky_loss(e, e_hat, mask, &TverskyParams { alpha })?)
}
