//! Fingerprint-specific augmentation.
//!
//! Geometric transforms act on every raster of a [`Sample`] at once so the
//! ground truth stays aligned with the image. Photometric effects, scratches
//! and abrasions only touch the image.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{bilinear, double_angle_encode};
use crate::raster::{FrequencyMap, GrayImage, Grid, OrientationField, SegmentationMask};
use crate::scalar::{wrap, Real};
use crate::synthetic::plot;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub image: GrayImage,
    pub mask: SegmentationMask,
    pub orient: OrientationField<T>,
    pub freq: FrequencyMap<T>,
    pub skeleton: Option<GrayImage>,
}

impl<T: Real> Sample<T> {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.image.dims();
        self.mask.check_dims("mask", w, h)?;
        self.orient.check_dims("orientation field", w, h)?;
        self.freq.check_dims("frequency map", w, h)?;
        if let Some(s) = &self.skeleton {
            s.check_dims("skeleton", w, h)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Morph {
    #[default]
    None,
    /// 3×3 grayscale minimum (thickens dark ridges).
    Erode,
    /// 3×3 grayscale maximum (thins dark ridges).
    Dilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphChoice {
    None,
    Erode,
    Dilate,
    /// One of the three, uniformly.
    Random,
}

/// Ranges the random transform is drawn from. Symmetric ranges (`±x`) are
/// given by their half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSpec {
    pub translate_frac: f64,
    pub rotate_deg: f64,
    pub scale_frac: f64,
    /// Mirror left-right with probability ½.
    pub hflip: bool,
    pub gamma_range: [f64; 2],
    pub contrast_range: [f64; 2],
    pub morph: MorphChoice,
    pub scratches: [usize; 2],
    pub abrasions: [usize; 2],
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            translate_frac: 0.05,
            rotate_deg: 20.0,
            scale_frac: 0.15,
            hflip: true,
            gamma_range: [0.7, 1.4],
            contrast_range: [0.6, 1.0],
            morph: MorphChoice::Random,
            scratches: [0, 3],
            abrasions: [0, 2],
            seed: 0,
        }
    }
}

impl AugmentSpec {
    /// A spec that draws the identity transform.
    pub fn identity() -> Self {
        Self {
            translate_frac: 0.0,
            rotate_deg: 0.0,
            scale_frac: 0.0,
            hflip: false,
            gamma_range: [1.0, 1.0],
            contrast_range: [1.0, 1.0],
            morph: MorphChoice::None,
            scratches: [0, 0],
            abrasions: [0, 0],
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::param(format!("augment spec: {what}")));
        if !(self.translate_frac >= 0.0 && self.translate_frac.is_finite()) {
            return bad("translate_frac must be non-negative");
        }
        if !(0.0..=180.0).contains(&self.rotate_deg) {
            return bad("rotate_deg must lie in [0, 180]");
        }
        if !(0.0..1.0).contains(&self.scale_frac) {
            return bad("scale_frac must lie in [0, 1)");
        }
        let [g0, g1] = self.gamma_range;
        if !(g0 > 0.0 && g0 <= g1 && g1.is_finite()) {
            return bad("gamma_range must be positive and ordered");
        }
        let [c0, c1] = self.contrast_range;
        if !(c0 >= 0.0 && c0 <= c1 && c1.is_finite()) {
            return bad("contrast_range must be non-negative and ordered");
        }
        if self.scratches[0] > self.scratches[1] || self.abrasions[0] > self.abrasions[1] {
            return bad("count ranges must be ordered");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scratch {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub width: usize,
    pub value: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abrasion {
    pub center: (f64, f64),
    pub axes: (f64, f64),
    pub angle: f64,
    /// Fraction of the way each covered pixel is pulled towards white.
    pub strength: f64,
}

/// A fully drawn augmentation. Geometry is about the image center: mirror
/// (x ↦ −x) first, then rotate counterclockwise on screen by `rotate`
/// radians, scale by `scale`, translate by `translate` pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub translate: (f64, f64),
    pub rotate: f64,
    pub scale: f64,
    pub flip: bool,
    pub gamma: f64,
    pub contrast: f64,
    pub morph: Morph,
    pub scratches: Vec<Scratch>,
    pub abrasions: Vec<Abrasion>,
}

impl Default for Transform {
    fn default() -> Self {
        Self {
            translate: (0.0, 0.0),
            rotate: 0.0,
            scale: 1.0,
            flip: false,
            gamma: 1.0,
            contrast: 1.0,
            morph: Morph::None,
            scratches: Vec::new(),
            abrasions: Vec::new(),
        }
    }
}

impl Transform {
    pub fn is_identity(&self) -> bool {
        !self.has_geometry()
            && self.gamma == 1.0
            && self.contrast == 1.0
            && self.morph == Morph::None
            && self.scratches.is_empty()
            && self.abrasions.is_empty()
    }

    fn has_geometry(&self) -> bool {
        self.translate != (0.0, 0.0) || self.rotate != 0.0 || self.scale != 1.0 || self.flip
    }

    fn center(w: usize, h: usize) -> (f64, f64) {
        ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0)
    }

    /// Where source pixel `p` lands in the output.
    pub fn forward(&self, w: usize, h: usize, p: (f64, f64)) -> (f64, f64) {
        let (cx, cy) = Self::center(w, h);
        let mut x = p.0 - cx;
        let y = p.1 - cy;
        if self.flip {
            x = -x;
        }
        let (s, c) = self.rotate.sin_cos();
        let (rx, ry) = (x * c + y * s, -x * s + y * c);
        (cx + self.scale * rx + self.translate.0, cy + self.scale * ry + self.translate.1)
    }

    /// Which source location feeds output pixel `q`.
    pub fn inverse(&self, w: usize, h: usize, q: (f64, f64)) -> (f64, f64) {
        let (cx, cy) = Self::center(w, h);
        let x = (q.0 - cx - self.translate.0) / self.scale;
        let y = (q.1 - cy - self.translate.1) / self.scale;
        let (s, c) = self.rotate.sin_cos();
        let (mut ux, uy) = (x * c - y * s, x * s + y * c);
        if self.flip {
            ux = -ux;
        }
        (cx + ux, cy + uy)
    }

    /// Orientation rule: mirror gives `π − θ`, rotation adds the angle.
    pub fn map_orientation(&self, theta: f64) -> f64 {
        let t = if self.flip { PI - theta } else { theta };
        wrap(t + self.rotate, PI)
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn count(rng: &mut ChaCha8Rng, r: [usize; 2]) -> usize {
    rng.gen_range(r[0]..=r[1])
}

/// Draws a transform for a sample of the given mask. Mark positions are
/// taken from mapped foreground pixels so they land on the print.
pub fn draw_transform(spec: &AugmentSpec, mask: &SegmentationMask, rng: &mut ChaCha8Rng) -> Transform {
    let (w, h) = mask.dims();
    let mut t = Transform {
        translate: (
            uniform(rng, -spec.translate_frac, spec.translate_frac) * w as f64,
            uniform(rng, -spec.translate_frac, spec.translate_frac) * h as f64,
        ),
        rotate: uniform(rng, -spec.rotate_deg, spec.rotate_deg).to_radians(),
        scale: 1.0 + uniform(rng, -spec.scale_frac, spec.scale_frac),
        flip: spec.hflip && rng.gen_bool(0.5),
        gamma: uniform(rng, spec.gamma_range[0], spec.gamma_range[1]),
        contrast: uniform(rng, spec.contrast_range[0], spec.contrast_range[1]),
        morph: match spec.morph {
            MorphChoice::None => Morph::None,
            MorphChoice::Erode => Morph::Erode,
            MorphChoice::Dilate => Morph::Dilate,
            MorphChoice::Random => [Morph::None, Morph::Erode, Morph::Dilate][rng.gen_range(0..3)],
        },
        ..Transform::default()
    };
    let fg: Vec<(f64, f64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y))
        .map(|(x, y)| (x as f64, y as f64))
        .collect();
    let n_scratch = count(rng, spec.scratches);
    let n_abrasion = count(rng, spec.abrasions);
    if fg.is_empty() {
        return t;
    }
    for _ in 0..n_scratch {
        let a = t.forward(w, h, fg[rng.gen_range(0..fg.len())]);
        let b = t.forward(w, h, fg[rng.gen_range(0..fg.len())]);
        let width = rng.gen_range(1..=3);
        let value = if rng.gen_bool(0.5) { 255 } else { 0 };
        t.scratches.push(Scratch { from: a, to: b, width, value });
    }
    for _ in 0..n_abrasion {
        let center = t.forward(w, h, fg[rng.gen_range(0..fg.len())]);
        let axes = (rng.gen_range(5.0..=25.0), rng.gen_range(5.0..=25.0));
        let angle = rng.gen_range(0.0..PI);
        let strength = rng.gen_range(0.6..=0.9);
        t.abrasions.push(Abrasion { center, axes, angle, strength });
    }
    t
}

/// Draws a transform from `spec.seed` and applies it.
pub fn augment<T: Real>(sample: &Sample<T>, spec: &AugmentSpec) -> Result<Sample<T>> {
    spec.validate()?;
    sample.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t = draw_transform(spec, &sample.mask, &mut rng);
    apply_transform(sample, &t)
}

pub fn apply_transform<T: Real>(sample: &Sample<T>, t: &Transform) -> Result<Sample<T>> {
    sample.validate()?;
    if t.is_identity() {
        return Ok(sample.clone());
    }
    if !(t.scale > 0.0 && t.scale.is_finite()) {
        return Err(Error::param(format!("scale must be positive, got {}", t.scale)));
    }
    let mut out = if t.has_geometry() { warp(sample, t) } else { sample.clone() };
    if !out.mask.has_foreground() {
        return Err(Error::EmptyAfterAugment);
    }
    let img = &mut out.image;
    match t.morph {
        Morph::None => {}
        Morph::Erode => *img = morph3(img, u8::min),
        Morph::Dilate => *img = morph3(img, u8::max),
    }
    if t.gamma != 1.0 {
        for p in img.as_mut_slice() {
            *p = (255.0 * (*p as f64 / 255.0).powf(t.gamma)).round() as u8;
        }
    }
    if t.contrast != 1.0 {
        let (sum, n) = img
            .as_slice()
            .iter()
            .zip(out.mask.as_slice())
            .filter(|p| *p.1)
            .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v as f64, n + 1));
        let mean = sum / n as f64;
        for p in img.as_mut_slice() {
            *p = (mean + t.contrast * (*p as f64 - mean)).round().clamp(0.0, 255.0) as u8;
        }
    }
    for s in &t.scratches {
        draw_scratch(img, s);
    }
    for a in &t.abrasions {
        draw_abrasion(img, a);
    }
    Ok(out)
}

fn nearest<V: Copy>(g: &Grid<V>, p: (f64, f64)) -> Option<V> {
    let (x, y) = (p.0.round(), p.1.round());
    g.in_bounds(x as isize, y as isize).then(|| g.get(x as usize, y as usize))
}

fn inside(w: usize, h: usize, p: (f64, f64)) -> bool {
    p.0 > -0.5 && p.1 > -0.5 && p.0 < w as f64 - 0.5 && p.1 < h as f64 - 0.5
}

fn warp<T: Real>(s: &Sample<T>, t: &Transform) -> Sample<T> {
    let (w, h) = s.image.dims();
    let src: Vec<(f64, f64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| t.inverse(w, h, (x as f64, y as f64)))
        .collect();
    let at = |x: usize, y: usize| src[y * w + x];

    let image_f = s.image.map(|&v| v as f64);
    let image = GrayImage::from_fn(w, h, |x, y| bilinear(&image_f, at(x, y).0, at(x, y).1).round().clamp(0.0, 255.0) as u8);
    let mask = SegmentationMask::from_fn(w, h, |x, y| {
        let p = at(x, y);
        inside(w, h, p) && nearest(&s.mask, p).unwrap_or(false)
    });
    let skeleton = s.skeleton.as_ref().map(|sk| {
        GrayImage::from_fn(w, h, |x, y| {
            let p = at(x, y);
            if inside(w, h, p) {
                nearest(sk, p).unwrap_or(0)
            } else {
                0
            }
        })
    });

    let (c2, s2) = double_angle_encode(&s.orient);
    let (c2, s2) = (c2.map(|v| v.to_f64_lossy()), s2.map(|v| v.to_f64_lossy()));
    let orient = OrientationField::from_fn(w, h, |x, y| {
        let (px, py) = at(x, y);
        let (c, sn) = (bilinear(&c2, px, py), bilinear(&s2, px, py));
        // a cancelled vector falls back to the nearest source angle
        let theta = if c.hypot(sn) > 1e-9 {
            wrap(sn.atan2(c) / 2.0, PI)
        } else {
            s.orient.get_clamped(px.round() as isize, py.round() as isize).to_f64_lossy()
        };
        T::of(t.map_orientation(theta))
    });

    let k = T::of(t.scale);
    let freq = FrequencyMap::from_fn(w, h, |x, y| {
        if !mask.get(x, y) {
            return T::zero();
        }
        let (px, py) = at(x, y);
        s.freq.get_clamped(px.round() as isize, py.round() as isize) / k
    });

    Sample {
        image,
        mask,
        orient,
        freq,
        skeleton,
    }
}

fn morph3(img: &GrayImage, pick: fn(u8, u8) -> u8) -> GrayImage {
    let (w, h) = img.dims();
    GrayImage::from_fn(w, h, |x, y| {
        let mut v = img.get(x, y);
        for dy in -1..=1 {
            for dx in -1..=1 {
                v = pick(v, img.get_clamped(x as isize + dx, y as isize + dy));
            }
        }
        v
    })
}

fn draw_scratch(img: &mut GrayImage, s: &Scratch) {
    let (dx, dy) = (s.to.0 - s.from.0, s.to.1 - s.from.1);
    let len = dx.hypot(dy).max(1.0);
    let steps = (len * 2.0).ceil() as usize;
    let (nx, ny) = (-dy / len, dx / len);
    let half = (s.width as f64 - 1.0) / 2.0;
    for i in 0..=steps {
        let a = i as f64 / steps as f64;
        let (x, y) = (s.from.0 + a * dx, s.from.1 + a * dy);
        for k in 0..s.width {
            let o = k as f64 - half;
            plot(img, (x + o * nx).round() as isize, (y + o * ny).round() as isize, s.value);
        }
    }
}

fn draw_abrasion(img: &mut GrayImage, a: &Abrasion) {
    let (w, h) = img.dims();
    let r = a.axes.0.max(a.axes.1).ceil() as isize;
    let (sn, cs) = a.angle.sin_cos();
    let (cx, cy) = (a.center.0.round() as isize, a.center.1.round() as isize);
    for y in (cy - r).max(0)..=(cy + r).min(h as isize - 1) {
        for x in (cx - r).max(0)..=(cx + r).min(w as isize - 1) {
            let (ux, uy) = (x as f64 - a.center.0, y as f64 - a.center.1);
            let (u, v) = (ux * cs + uy * sn, -ux * sn + uy * cs);
            if (u / a.axes.0).powi(2) + (v / a.axes.1).powi(2) <= 1.0 {
                let p = img.get(x as usize, y as usize) as f64;
                img.set(x as usize, y as usize, (p + a.strength * (255.0 - p)).round() as u8);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::orientation_distance;
    use crate::synthetic::sinusoid;

    fn disk_sample(theta: f64, freq: f64) -> Sample<f64> {
        let (w, h) = (160, 160);
        Sample {
            image: sinusoid(w, h, freq, theta, 0.0, 128.0, 80.0),
            mask: SegmentationMask::from_fn(w, h, |x, y| (x as f64 - 79.5).hypot(y as f64 - 79.5) < 50.0),
            orient: OrientationField::constant(w, h, theta),
            freq: FrequencyMap::from_fn(w, h, |x, y| if (x as f64 - 79.5).hypot(y as f64 - 79.5) < 50.0 { freq } else { 0.0 }),
            skeleton: Some(GrayImage::from_fn(w, h, |x, y| if (x + y) % 9 == 0 { 255 } else { 0 })),
        }
    }

    #[test]
    fn identity_spec_is_noop() {
        let s = disk_sample(0.4, 1.0 / 9.0);
        for seed in [0, 1, 99] {
            let spec = AugmentSpec { seed, ..AugmentSpec::identity() };
            assert_eq!(augment(&s, &spec).unwrap(), s);
        }
    }

    #[test]
    fn rotation_updates_orientation() {
        let s = disk_sample(PI / 2.0, 1.0 / 9.0);
        let t = Transform {
            rotate: 15f64.to_radians(),
            ..Transform::default()
        };
        let out = apply_transform(&s, &t).unwrap();
        let want = PI / 2.0 + 15f64.to_radians();
        for y in 0..160 {
            for x in 0..160 {
                if out.mask.get(x, y) {
                    assert!(orientation_distance(out.orient.get(x, y), want) < 1f64.to_radians());
                }
            }
        }
        // a source pixel lands where the forward map says
        let p = t.forward(160, 160, (100.0, 80.0));
        let q = t.inverse(160, 160, p);
        assert!((q.0 - 100.0).abs() < 1e-9 && (q.1 - 80.0).abs() < 1e-9);
        // counterclockwise on screen: a point right of center moves up
        assert!(p.1 < 80.0);
    }

    #[test]
    fn scale_divides_frequency() {
        let s = disk_sample(0.3, 1.0 / 9.0);
        let t = Transform {
            scale: 1.15,
            ..Transform::default()
        };
        let out = apply_transform(&s, &t).unwrap();
        let want = (1.0 / 9.0) / 1.15;
        for (&f, &m) in out.freq.as_slice().iter().zip(out.mask.as_slice()) {
            if m {
                assert!((f - want).abs() / want < 0.02);
            }
        }
    }

    #[test]
    fn area_scales_quadratically() {
        let s = disk_sample(0.3, 1.0 / 9.0);
        let a0 = s.mask.foreground_count() as f64;
        for k in [0.85, 0.9, 1.1, 1.15] {
            let t = Transform { scale: k, ..Transform::default() };
            let a = apply_transform(&s, &t).unwrap().mask.foreground_count() as f64;
            assert!((a / a0 - k * k).abs() / (k * k) < 0.02, "k={k}: {}", a / a0);
        }
    }

    #[test]
    fn flip_is_involution() {
        let s = disk_sample(0.7, 1.0 / 8.0);
        let t = Transform { flip: true, ..Transform::default() };
        let once = apply_transform(&s, &t).unwrap();
        assert!(orientation_distance(once.orient.get(10, 10), PI - 0.7) < 1e-9);
        let twice = apply_transform(&once, &t).unwrap();
        assert_eq!(twice.image, s.image);
        assert_eq!(twice.mask, s.mask);
        assert_eq!(twice.skeleton, s.skeleton);
        assert_eq!(twice.freq, s.freq);
        for (a, b) in twice.orient.as_slice().iter().zip(s.orient.as_slice()) {
            assert!(orientation_distance(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let s = disk_sample(0.2, 1.0 / 10.0);
        let spec = AugmentSpec { seed: 42, ..AugmentSpec::default() };
        let a = augment(&s, &spec).unwrap();
        let b = augment(&s, &spec).unwrap();
        assert_eq!(a, b);
        let c = augment(&s, &AugmentSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn photometric_effects_leave_ground_truth() {
        let s = disk_sample(0.2, 1.0 / 10.0);
        let spec = AugmentSpec {
            gamma_range: [1.3, 1.3],
            contrast_range: [0.5, 0.5],
            morph: MorphChoice::Erode,
            scratches: [2, 2],
            abrasions: [1, 1],
            ..AugmentSpec::identity()
        };
        let out = augment(&s, &spec).unwrap();
        assert_ne!(out.image, s.image);
        assert_eq!(out.mask, s.mask);
        assert_eq!(out.orient, s.orient);
        assert_eq!(out.freq, s.freq);
        assert_eq!(out.skeleton, s.skeleton);
    }

    #[test]
    fn pushed_out_of_frame() {
        let s = disk_sample(0.2, 1.0 / 10.0);
        let t = Transform { translate: (400.0, 0.0), ..Transform::default() };
        assert!(matches!(apply_transform(&s, &t), Err(Error::EmptyAfterAugment)));
    }

    #[test]
    fn spec_validation_and_json() {
        assert!(AugmentSpec::default().validate().is_ok());
        assert!(AugmentSpec { rotate_deg: 200.0, ..Default::default() }.validate().is_err());
        assert!(AugmentSpec { translate_frac: -0.1, ..Default::default() }.validate().is_err());
        assert!(AugmentSpec { gamma_range: [1.2, 1.0], ..Default::default() }.validate().is_err());
        let spec: AugmentSpec = serde_json::from_str(r#"{"rotate_deg": 5, "seed": 3}"#).unwrap();
        assert_eq!(spec.rotate_deg, 5.0);
        assert_eq!(spec.scale_frac, 0.15);
        assert!(serde_json::from_str::<AugmentSpec>(r#"{"rotation": 5}"#).is_err());
    }
}
