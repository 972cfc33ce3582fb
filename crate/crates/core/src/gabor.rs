//! Frequency-adaptive Gabor kernels and the pre-computed filter bank.
//!
//! A kernel with orientation `θ` and frequency `f` is sampled on integer
//! offsets as `exp(−(xθ² + yθ²)/(2σ²)) · cos(2π f xθ)` with
//! `xθ = x sin θ + y cos θ`, `yθ = −x cos θ + y sin θ` and `σ = 5/(12 f)`,
//! on an odd `s × s` support with `s = 1 + 2⌈3σ⌉`, then shifted to zero mean
//! and scaled to unit L2 norm.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::write_gray_png;
use crate::error::{Error, Result};
use crate::raster::GrayImage;
use crate::scalar::{orientation_distance, Real};

/// Envelope width per ridge period: `σ = SIGMA_PERIODS / f`.
pub const SIGMA_PERIODS: f64 = 5.0 / 12.0;

pub fn sigma_for<T: Real>(freq: T) -> T {
    T::of(5.0) / (T::of(12.0) * freq)
}

/// Odd support size `1 + 2⌈3σ⌉`.
pub fn size_for<T: Real>(sigma: T) -> usize {
    let half = (T::of(3.0) * sigma).ceil().to_usize().expect("finite kernel radius");
    1 + 2 * half
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaborKernel<T> {
    size: usize,
    weights: Vec<T>,
    theta: T,
    freq: T,
    sigma: T,
}

impl<T: Real> GaborKernel<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Row-major `size × size` weights; row index is the y offset.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the center.
    pub fn at(&self, dx: isize, dy: isize) -> T {
        let r = self.radius() as isize;
        self.weights[((dy + r) * self.size as isize + dx + r) as usize]
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn freq(&self) -> T {
        self.freq
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

fn check_kernel_params<T: Real>(theta: T, freq: T) -> Result<()> {
    if !(theta >= T::zero() && theta < T::PI()) {
        return Err(Error::param(format!("kernel orientation {theta} outside [0, π)")));
    }
    if !(freq > T::zero() && freq < T::of(0.5)) {
        return Err(Error::param(format!("kernel frequency {freq} outside (0, 0.5)")));
    }
    Ok(())
}

/// Un-standardized samples of the Gabor function; returns `(size, weights, sigma)`.
pub fn raw_gabor_weights<T: Real>(theta: T, freq: T) -> Result<(usize, Vec<T>, T)> {
    check_kernel_params(theta, freq)?;
    let sigma = sigma_for(freq);
    let size = size_for(sigma);
    let r = (size / 2) as isize;
    let (sin_t, cos_t) = theta.sin_cos();
    let two_sigma2 = T::of(2.0) * sigma * sigma;
    let omega = T::TAU() * freq;
    let mut w = Vec::with_capacity(size * size);
    for y in -r..=r {
        let yf = T::of(y as f64);
        for x in -r..=r {
            let xf = T::of(x as f64);
            let xt = xf * sin_t + yf * cos_t;
            let yt = -xf * cos_t + yf * sin_t;
            w.push((-(xt * xt + yt * yt) / two_sigma2).exp() * (omega * xt).cos());
        }
    }
    Ok((size, w, sigma))
}

/// Builds the standardized kernel for orientation `theta ∈ [0, π)` and
/// frequency `freq ∈ (0, 0.5)` cycles/pixel.
pub fn gabor_kernel<T: Real>(theta: T, freq: T) -> Result<GaborKernel<T>> {
    let (size, mut weights, sigma) = raw_gabor_weights(theta, freq)?;
    let n = T::of_usize(weights.len());
    let mean = weights.iter().copied().sum::<T>() / n;
    for w in &mut weights {
        *w -= mean;
    }
    let norm = weights.iter().map(|&w| w * w).sum::<T>().sqrt();
    for w in &mut weights {
        *w = *w / norm;
    }
    Ok(GaborKernel {
        size,
        weights,
        theta,
        freq,
        sigma,
    })
}

/// Bank layout: `orientation_count` uniform angles `iπ/n` crossed with the
/// frequencies `1/period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankParams {
    pub orientation_count: usize,
    /// Ridge periods in pixels.
    pub periods: Vec<f64>,
}

impl Default for BankParams {
    fn default() -> Self {
        Self {
            orientation_count: 16,
            periods: (5..=13).map(f64::from).collect(),
        }
    }
}

impl BankParams {
    pub fn validate(&self) -> Result<()> {
        if self.orientation_count == 0 {
            return Err(Error::param("orientation_count must be ≥ 1"));
        }
        if self.periods.is_empty() {
            return Err(Error::param("at least one period is required"));
        }
        for &p in &self.periods {
            if !(p.is_finite() && p > 2.0) {
                return Err(Error::param(format!("period {p} must be finite and > 2")));
            }
        }
        let mut sorted = self.periods.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("periods must be distinct"));
        }
        Ok(())
    }
}

/// Pre-computed kernels, orientation-major then frequency-ascending.
#[derive(Debug, Clone)]
pub struct GaborBank<T> {
    orientations: Vec<T>,
    frequencies: Vec<T>,
    kernels: Vec<GaborKernel<T>>,
}

pub fn build_bank<T: Real>(params: &BankParams) -> Result<GaborBank<T>> {
    params.validate()?;
    let n = params.orientation_count;
    let orientations: Vec<T> = (0..n)
        .map(|i| T::of_usize(i) * T::PI() / T::of_usize(n))
        .collect();
    let mut periods = params.periods.clone();
    // descending periods = ascending frequencies
    periods.sort_by(|a, b| b.total_cmp(a));
    let frequencies: Vec<T> = periods.iter().map(|&p| T::one() / T::of(p)).collect();
    let mut kernels = Vec::with_capacity(n * frequencies.len());
    for &theta in &orientations {
        for &f in &frequencies {
            kernels.push(gabor_kernel(theta, f)?);
        }
    }
    Ok(GaborBank {
        orientations,
        frequencies,
        kernels,
    })
}

impl<T: Real> GaborBank<T> {
    pub fn orientations(&self) -> &[T] {
        &self.orientations
    }

    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    pub fn kernels(&self) -> &[GaborKernel<T>] {
        &self.kernels
    }

    pub fn kernel(&self, index: usize) -> &GaborKernel<T> {
        &self.kernels[index]
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn index_of(&self, orientation_index: usize, frequency_index: usize) -> usize {
        orientation_index * self.frequencies.len() + frequency_index
    }

    /// Inverse of [`GaborBank::index_of`].
    pub fn split_index(&self, index: usize) -> (usize, usize) {
        (index / self.frequencies.len(), index % self.frequencies.len())
    }

    pub fn max_radius(&self) -> usize {
        self.kernels.iter().map(GaborKernel::radius).max().unwrap_or(0)
    }

    /// Nearest entry: circular orientation distance first, then frequency
    /// distance; ties go to the lower index. Out-of-range frequencies clamp
    /// to the nearest end of the bank.
    pub fn select(&self, theta: T, freq: T) -> usize {
        let mut best_o = 0;
        let mut best_d = T::infinity();
        for (i, &o) in self.orientations.iter().enumerate() {
            let d = orientation_distance(theta, o);
            if d < best_d {
                best_d = d;
                best_o = i;
            }
        }
        let mut best_f = 0;
        let mut best_df = T::infinity();
        for (j, &f) in self.frequencies.iter().enumerate() {
            let d = (freq - f).abs();
            if d < best_df {
                best_df = d;
                best_f = j;
            }
        }
        self.index_of(best_o, best_f)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BankManifestEntry {
    pub index: usize,
    pub orientation_index: usize,
    pub frequency_index: usize,
    pub theta: f64,
    pub freq: f64,
    pub sigma: f64,
    pub size: usize,
    pub file: String,
}

/// Writes each kernel as a min-max normalized PNG plus `manifest.json`.
pub fn dump_bank<T: Real>(bank: &GaborBank<T>, dir: &Path) -> Result<Vec<BankManifestEntry>> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(bank.len());
    for (index, k) in bank.kernels().iter().enumerate() {
        let (oi, fi) = bank.split_index(index);
        let lo = k.weights().iter().copied().fold(T::infinity(), T::min);
        let hi = k.weights().iter().copied().fold(T::neg_infinity(), T::max);
        let span = if hi > lo { hi - lo } else { T::one() };
        let img = GrayImage::from_fn(k.size(), k.size(), |x, y| {
            let v = (k.weights()[y * k.size() + x] - lo) / span;
            (v.to_f64_lossy() * 255.0).round() as u8
        });
        let file = format!("kernel_{oi:02}_{fi:02}.png");
        write_gray_png(dir.join(&file), &img)?;
        entries.push(BankManifestEntry {
            index,
            orientation_index: oi,
            frequency_index: fi,
            theta: k.theta().to_f64_lossy(),
            freq: k.freq().to_f64_lossy(),
            sigma: k.sigma().to_f64_lossy(),
            size: k.size(),
            file,
        });
    }
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&entries)?)?;
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn period_nine_geometry() {
        let k = gabor_kernel(0.0f64, 1.0 / 9.0).unwrap();
        assert!((k.sigma() - 3.75).abs() < 1e-12);
        assert_eq!(k.size(), 25);
        let k5 = gabor_kernel(0.0f64, 0.2).unwrap();
        assert_eq!(k5.size(), 15);
        let k13 = gabor_kernel(0.0f64, 1.0 / 13.0).unwrap();
        assert_eq!(k13.size(), 35);
    }

    #[test]
    fn raw_center_is_one() {
        for &(t, f) in &[(0.0, 0.1), (1.0, 0.2), (3.0, 1.0 / 13.0)] {
            let (s, w, _) = raw_gabor_weights(t, f).unwrap();
            assert_eq!(w[(s / 2) * s + s / 2], 1.0);
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        assert!(gabor_kernel(0.0, 0.0).is_err());
        assert!(gabor_kernel(0.0, 0.5).is_err());
        assert!(gabor_kernel(-PI / 16.0, 0.1).is_err());
        assert!(gabor_kernel(PI, 0.1).is_err());
        assert!(gabor_kernel(15.0 * PI / 16.0, 0.1).is_ok());
    }

    #[test]
    fn default_bank_is_standardized() {
        let bank = build_bank::<f64>(&BankParams::default()).unwrap();
        assert_eq!(bank.len(), 144);
        for k in bank.kernels() {
            let n = k.weights().len() as f64;
            let mean: f64 = k.weights().iter().sum::<f64>() / n;
            let norm: f64 = k.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
            assert!(mean.abs() <= 1e-9);
            assert!((norm - 1.0).abs() <= 1e-9);
            assert_eq!(k.size() % 2, 1);
            assert_eq!(k.size(), 1 + 2 * (3.0 * 5.0 / (12.0 * k.freq())).ceil() as usize);
        }
        assert!(bank.frequencies().windows(2).all(|w| w[0] < w[1]));
        for (i, &o) in bank.orientations().iter().enumerate() {
            assert!((o - i as f64 * PI / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn singleton_bank() {
        let bank = build_bank::<f64>(&BankParams {
            orientation_count: 1,
            periods: vec![7.0],
        })
        .unwrap();
        assert_eq!(bank.len(), 1);
        assert_eq!(bank.kernel(0), &gabor_kernel(0.0, 1.0 / 7.0).unwrap());
    }

    #[test]
    fn bank_param_validation() {
        let bad = [
            BankParams { orientation_count: 0, ..Default::default() },
            BankParams { periods: vec![], ..Default::default() },
            BankParams { periods: vec![2.0], ..Default::default() },
            BankParams { periods: vec![5.0, 5.0], ..Default::default() },
        ];
        for p in bad {
            assert!(build_bank::<f64>(&p).is_err(), "{p:?}");
        }
    }

    #[test]
    fn selection_examples() {
        let bank = build_bank::<f64>(&BankParams::default()).unwrap();
        // frequencies ascend, so period 9 sits at column 4 and period 13 at 0
        let col9 = bank.frequencies().iter().position(|&f| (f - 1.0 / 9.0).abs() < 1e-15).unwrap();
        assert_eq!(bank.select(3.0 * PI / 16.0, 1.0 / 9.0), bank.index_of(3, col9));
        assert_eq!(bank.split_index(bank.select(0.99 * PI, 1.0 / 9.0)).0, 0);
        assert_eq!(bank.split_index(bank.select(1.0, 1.0 / 30.0)).1, 0);
        assert_eq!(bank.split_index(bank.select(1.0, 0.45)).1, 8);
    }

    #[test]
    fn selection_matches_exhaustive_argmin() {
        let bank = build_bank::<f64>(&BankParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let theta = rng.gen_range(0.0..PI);
            let f = rng.gen_range(0.01..0.3);
            let mut best = (f64::INFINITY, f64::INFINITY, usize::MAX);
            for (i, k) in bank.kernels().iter().enumerate() {
                let key = (orientation_distance(theta, k.theta()), (f - k.freq()).abs(), i);
                if (key.0, key.1) < (best.0, best.1) {
                    best = key;
                }
            }
            assert_eq!(bank.select(theta, f), best.2);
        }
    }

    fn response(k: &GaborKernel<f64>, pattern_theta: f64, f: f64) -> f64 {
        // correlation at the center of a 64x64 unit-amplitude sinusoid
        let r = k.radius() as isize;
        let (s, c) = pattern_theta.sin_cos();
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (dx as f64, dy as f64);
                acc += k.at(dx, dy) * (2.0 * PI * f * (x * s + y * c)).cos();
            }
        }
        acc
    }

    #[test]
    fn orientation_selectivity() {
        let bank = build_bank::<f64>(&BankParams::default()).unwrap();
        for k in bank.kernels() {
            let along = response(k, k.theta(), k.freq());
            let across = response(k, k.theta() + PI / 2.0, k.freq());
            assert!(along > across, "θ={} f={}: {along} vs {across}", k.theta(), k.freq());
            assert!(along > 0.0);
        }
    }

    #[test]
    fn f32_bank_builds() {
        let bank = build_bank::<f32>(&BankParams::default()).unwrap();
        for k in bank.kernels() {
            let norm: f32 = k.weights().iter().map(|w| w * w).sum::<f32>().sqrt();
            assert!((norm - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn dump_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let bank = build_bank::<f64>(&BankParams { orientation_count: 2, periods: vec![6.0, 9.0] }).unwrap();
        let entries = dump_bank(&bank, dir.path()).unwrap();
        assert_eq!(entries.len(), 4);
        assert!(dir.path().join("manifest.json").exists());
        assert!(dir.path().join(&entries[3].file).exists());
        // frequencies ascend within an orientation, so period 9 comes first
        assert_eq!(entries[0].size, 25);
        assert_eq!(entries[1].size, 17);
    }
}
