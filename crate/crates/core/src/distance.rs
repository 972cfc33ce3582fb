//! Exact Euclidean distance transform and mask erosion.

use crate::raster::{Grid, SegmentationMask};

const INF: f64 = 1e20;

/// One-dimensional squared-distance transform of a sampled function
/// (lower envelope of parabolas).
fn dt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                // k == 0 is impossible here since z[0] = -inf
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest pixel where
/// `is_feature` is true. Pixels are feature-free → every entry is `1e20`.
pub fn squared_distance_transform(width: usize, height: usize, is_feature: impl Fn(usize, usize) -> bool) -> Grid<f64> {
    let mut g = Grid::from_fn(width, height, |x, y| if is_feature(x, y) { 0.0 } else { INF });
    let n = width.max(height);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for x in 0..width {
        for y in 0..height {
            f[y] = g.get(x, y);
        }
        dt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for y in 0..height {
            g.set(x, y, out[y]);
        }
    }
    for y in 0..height {
        f[..width].copy_from_slice(g.row(y));
        dt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        for x in 0..width {
            g.set(x, y, out[x]);
        }
    }
    g
}

/// Squared distance from each pixel to the nearest background pixel, where
/// everything outside the image counts as background.
pub fn squared_distance_to_background(mask: &SegmentationMask) -> Grid<f64> {
    let (w, h) = mask.dims();
    let padded = squared_distance_transform(w + 2, h + 2, |x, y| {
        x == 0 || y == 0 || x == w + 1 || y == h + 1 || !mask.get(x - 1, y - 1)
    });
    Grid::from_fn(w, h, |x, y| padded.get(x + 1, y + 1))
}

/// Keeps the foreground pixels whose Euclidean distance to every background
/// pixel (the image border included) is strictly greater than `radius`.
pub fn erode_mask(mask: &SegmentationMask, radius: f64) -> SegmentationMask {
    assert!(radius >= 0.0, "erosion radius must be non-negative");
    if radius == 0.0 {
        return mask.clone();
    }
    let d2 = squared_distance_to_background(mask);
    let r2 = radius * radius;
    SegmentationMask::from_fn(mask.width(), mask.height(), |x, y| {
        mask.get(x, y) && d2.get(x, y) > r2
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force: scan every background pixel, plus the one-pixel frame
    /// around the image.
    fn brute_erode(mask: &SegmentationMask, radius: f64) -> SegmentationMask {
        let (w, h) = mask.dims();
        let (wi, hi) = (w as isize, h as isize);
        let mut bg = Vec::new();
        for y in -1..=hi {
            for x in -1..=wi {
                if !mask.in_bounds(x, y) || !mask.get(x as usize, y as usize) {
                    bg.push((x, y));
                }
            }
        }
        SegmentationMask::from_fn(w, h, |x, y| {
            mask.get(x, y)
                && bg.iter().all(|&(bx, by)| {
                    let dx = (bx - x as isize) as f64;
                    let dy = (by - y as isize) as f64;
                    dx * dx + dy * dy > radius * radius
                })
        })
    }

    fn random_mask(w: usize, h: usize, seed: &[bool]) -> SegmentationMask {
        // blocky masks: 4x4 cells driven by the seed bits
        let cw = w.div_ceil(4);
        SegmentationMask::from_fn(w, h, |x, y| seed[((y / 4) * cw + x / 4) % seed.len()])
    }

    #[test]
    fn radius_zero_is_identity() {
        let m = SegmentationMask::from_fn(7, 5, |x, y| (x + y) % 3 == 0);
        assert_eq!(erode_mask(&m, 0.0), m);
    }

    #[test]
    fn full_mask_radius_14_leaves_inner_72_square() {
        let m = SegmentationMask::full(100, 100);
        let e = erode_mask(&m, 14.0);
        let oracle = brute_erode(&m, 14.0);
        assert_eq!(e, oracle);
        assert_eq!(e.foreground_count(), 72 * 72);
        assert!(e.get(14, 14) && e.get(85, 85));
        assert!(!e.get(13, 50) && !e.get(86, 50));
    }

    #[test]
    fn huge_radius_empties() {
        let m = SegmentationMask::full(100, 100);
        assert!(!erode_mask(&m, 200.0).has_foreground());
    }

    #[test]
    fn digital_disks_are_not_additive() {
        // a lone background pixel at the center: (2,2) lies at distance √8 ≤ 3
        // but survives two successive erosions by 1 and 2.
        let m = SegmentationMask::from_fn(41, 41, |x, y| !(x == 20 && y == 20));
        let once = erode_mask(&m, 3.0);
        let twice = erode_mask(&erode_mask(&m, 1.0), 2.0);
        assert!(!once.get(22, 22));
        assert!(twice.get(22, 22));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_brute_force(w in 1usize..40, h in 1usize..40,
                               bits in proptest::collection::vec(any::<bool>(), 1..120),
                               r in 0.0f64..9.0) {
            let m = random_mask(w, h, &bits);
            prop_assert_eq!(erode_mask(&m, r), brute_erode(&m, r));
        }

        #[test]
        fn composition_is_contained(w in 1usize..64, h in 1usize..64,
                                    bits in proptest::collection::vec(any::<bool>(), 1..300),
                                    a in 0u32..6, b in 0u32..6) {
            let m = random_mask(w, h, &bits);
            let direct = erode_mask(&m, (a + b) as f64);
            let stepwise = erode_mask(&erode_mask(&m, a as f64), b as f64);
            prop_assert_eq!(&direct, &brute_erode(&m, (a + b) as f64));
            for (d, s) in direct.as_slice().iter().zip(stepwise.as_slice()) {
                prop_assert!(!d || *s);
            }
            if a == 0 || b == 0 {
                prop_assert_eq!(direct, stepwise);
            }
        }
    }
}
