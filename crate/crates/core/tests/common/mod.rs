#![allow(dead_code)]

use std::path::Path;

use fpenhance::codec::{write_frequency, write_gray_png, write_mask_png, write_minutiae, write_orientation};
use fpenhance::enhance::{enhance_gbfen, EnhanceOptions};
use fpenhance::minutiae::{binarize, detect_minutiae, thin, DetectParams};
use fpenhance::pipeline::ManifestEntry;
use fpenhance::synthetic::dislocated_sinusoid;
use fpenhance::{build_bank, BankParams, FrequencyMap, GrayImage, MinutiaSet, OrientationField, SegmentationMask};

pub struct Print {
    pub image: GrayImage,
    pub mask: SegmentationMask,
    pub orient: OrientationField<f64>,
    pub freq: FrequencyMap<f64>,
}

/// A disk-shaped print of straight ridges with a few dislocations.
pub fn synthetic_print(size: usize, theta: f64, period: f64, defects: &[(f64, f64, f64)]) -> Print {
    let c = (size as f64 - 1.0) / 2.0;
    let r = size as f64 * 0.45;
    let inside = |x: usize, y: usize| (x as f64 - c).hypot(y as f64 - c) < r;
    Print {
        image: dislocated_sinusoid(size, size, 1.0 / period, theta, defects, 128.0, 90.0),
        mask: SegmentationMask::from_fn(size, size, inside),
        orient: OrientationField::constant(size, size, theta),
        freq: FrequencyMap::from_fn(size, size, |x, y| if inside(x, y) { 1.0 / period } else { 0.0 }),
    }
}

/// Minutiae the default pipeline extracts from `p` given its exact fields.
pub fn reference_minutiae(p: &Print) -> MinutiaSet {
    let bank = build_bank::<f64>(&BankParams::default()).unwrap();
    let e = enhance_gbfen(&p.image, &p.mask, &p.orient, &p.freq, &bank, EnhanceOptions::default()).unwrap();
    detect_minutiae(&thin(&binarize(&e, 0.5)), &p.mask, &DetectParams::default()).unwrap()
}

/// Writes the print's files under `dir` and returns the manifest entry.
pub fn write_print(dir: &Path, name: &str, p: &Print, with_fields: bool, gt: Option<&MinutiaSet>, group: Option<&str>) -> ManifestEntry {
    let image = dir.join(format!("{name}.png"));
    let mask = dir.join(format!("{name}_mask.png"));
    write_gray_png(&image, &p.image).unwrap();
    write_mask_png(&mask, &p.mask).unwrap();
    let (mut orient, mut freq, mut gt_minutiae) = (None, None, None);
    if with_fields {
        let o = dir.join(format!("{name}.ofd"));
        let f = dir.join(format!("{name}.fqm"));
        write_orientation(&o, &p.orient).unwrap();
        write_frequency(&f, &p.freq).unwrap();
        orient = Some(o);
        freq = Some(f);
    }
    if let Some(g) = gt {
        let path = dir.join(format!("{name}.min"));
        write_minutiae(&path, g).unwrap();
        gt_minutiae = Some(path);
    }
    ManifestEntry {
        name: name.to_string(),
        image,
        mask,
        orient,
        freq,
        gt_minutiae,
        group: group.map(str::to_string),
    }
}

pub const DEFECTS: [(f64, f64, f64); 3] = [(90.0, 100.0, 1.0), (150.0, 140.0, -1.0), (120.0, 180.0, 1.0)];
