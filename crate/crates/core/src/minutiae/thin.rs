use super::ring;
use crate::error::{Error, Result};
use crate::raster::{EnhancedImage, Grid};
use crate::scalar::Real;

/// One-pixel-wide ridge skeleton: no ridge pixel with two or more neighbors
/// can be removed without changing the 8-connected topology.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonImage(Grid<bool>);

impl SkeletonImage {
    /// Wraps `flags` after checking thinness.
    pub fn new(flags: Grid<bool>) -> Result<Self> {
        if let Some((x, y)) = first_redundant(&flags) {
            return Err(Error::SkeletonNotThin { x, y });
        }
        Ok(Self(flags))
    }

    pub fn flags(&self) -> &Grid<bool> {
        &self.0
    }

    pub fn into_flags(self) -> Grid<bool> {
        self.0
    }

    pub fn pixel_count(&self) -> usize {
        self.0.as_slice().iter().filter(|&&b| b).count()
    }
}

/// `value ≥ threshold` → ridge.
pub fn binarize<T: Real>(enhanced: &EnhancedImage<T>, threshold: T) -> Grid<bool> {
    enhanced.map(|&v| v >= threshold)
}

/// 8-connectivity number (Yokoi): the pixel is simple iff it equals 1.
fn connectivity8(n: &[bool; 8]) -> u32 {
    let b = |k: usize| u32::from(!n[k % 8]);
    (0..8)
        .step_by(2)
        .map(|k| b(k) - b(k) * b(k + 1) * b(k + 2))
        .sum()
}

/// True when deleting the pixel preserves 8-connected foreground and
/// 4-connected background topology.
pub fn is_simple(g: &Grid<bool>, x: usize, y: usize) -> bool {
    connectivity8(&ring(g, x, y)) == 1
}

fn neighbors(n: &[bool; 8]) -> u32 {
    n.iter().map(|&b| u32::from(b)).sum()
}

/// Removable non-endpoint pixel.
fn redundant(g: &Grid<bool>, x: usize, y: usize) -> bool {
    let n = ring(g, x, y);
    neighbors(&n) >= 2 && connectivity8(&n) == 1
}

fn first_redundant(g: &Grid<bool>) -> Option<(usize, usize)> {
    let (w, h) = g.dims();
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .find(|&(x, y)| g.get(x, y) && redundant(g, x, y))
}

pub fn is_thin(g: &Grid<bool>) -> bool {
    first_redundant(g).is_none()
}

/// 0→1 transitions around the ring.
fn transitions(n: &[bool; 8]) -> u32 {
    (0..8).filter(|&k| !n[k] && n[(k + 1) % 8]).count() as u32
}

/// Removes every remaining redundant pixel in raster order.
pub(crate) fn cleanup(g: &mut Grid<bool>) {
    let (w, h) = g.dims();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if g.get(x, y) && redundant(g, x, y) {
                    g.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Zhang–Suen thinning.
///
/// Each sub-iteration marks candidates with the classic parallel rules;
/// candidates are then deleted one at a time, skipping any that stopped
/// being simple, so components (e.g. 2×2 blocks) never vanish. A final pass
/// removes the staircase pixels Zhang–Suen leaves behind.
pub fn thin(binary: &Grid<bool>) -> SkeletonImage {
    let mut g = binary.clone();
    let (w, h) = g.dims();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut marked = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if !g.get(x, y) {
                        continue;
                    }
                    let n = ring(&g, x, y);
                    let b = neighbors(&n);
                    if !(2..=6).contains(&b) || transitions(&n) != 1 {
                        continue;
                    }
                    // n[0]=N n[2]=E n[4]=S n[6]=W
                    let ok = if pass == 0 {
                        !(n[0] && n[2] && n[4]) && !(n[2] && n[4] && n[6])
                    } else {
                        !(n[0] && n[2] && n[6]) && !(n[0] && n[4] && n[6])
                    };
                    if ok {
                        marked.push((x, y));
                    }
                }
            }
            for (x, y) in marked {
                if redundant(&g, x, y) {
                    g.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    cleanup(&mut g);
    SkeletonImage(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force 8-connected component count.
    fn components(g: &Grid<bool>) -> usize {
        let (w, h) = g.dims();
        let mut seen = vec![false; w * h];
        let mut count = 0;
        for start in 0..w * h {
            if !g.as_slice()[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if g.in_bounds(nx, ny) {
                            let j = ny as usize * w + nx as usize;
                            if g.as_slice()[j] && !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        count
    }

    fn random_blobs(rng: &mut ChaCha8Rng) -> Grid<bool> {
        let w = rng.gen_range(8..=64);
        let h = rng.gen_range(8..=64);
        let discs: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..6))
            .map(|_| (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64), rng.gen_range(1.0..10.0)))
            .collect();
        let mut g = Grid::from_fn(w, h, |x, y| {
            discs.iter().any(|&(cx, cy, r)| (x as f64 - cx).hypot(y as f64 - cy) <= r)
        });
        for _ in 0..(w * h / 20) {
            let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
            g.set(x, y, !g.get(x, y));
        }
        g
    }

    #[test]
    fn binarize_contract() {
        let bin = EnhancedImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        for t in [1e-6, 0.3, 1.0] {
            assert_eq!(binarize(&bin, t).as_slice(), &[false, true]);
        }
        let e = EnhancedImage::<f64>::new(2, 2, vec![0.4; 4]).unwrap();
        assert!(binarize(&e, 0.5).as_slice().iter().all(|&b| !b));
        let e = EnhancedImage::<f64>::new(2, 2, vec![0.5; 4]).unwrap();
        assert!(binarize(&e, 0.5).as_slice().iter().all(|&b| b));
    }

    #[test]
    fn thick_bar_thins_to_line() {
        let g = Grid::from_fn(40, 15, |x, y| (5..35).contains(&x) && (5..10).contains(&y));
        let s = thin(&g);
        let f = s.flags();
        assert!(is_thin(f));
        assert_eq!(components(f), 1);
        let pts: Vec<(usize, usize)> = (0..15).flat_map(|y| (0..40).map(move |x| (x, y))).filter(|&(x, y)| f.get(x, y)).collect();
        let xs: Vec<usize> = pts.iter().map(|p| p.0).collect();
        let (lo, hi) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
        assert!(lo <= 7 && hi >= 32, "endpoints {lo}..{hi}");
        // one pixel per column
        for x in lo..=hi {
            assert_eq!(pts.iter().filter(|p| p.0 == x).count(), 1);
        }
        assert!(pts.iter().all(|p| (5..=9).contains(&p.1)), "{pts:?}");
    }

    #[test]
    fn thin_diagonal_is_unchanged() {
        let g = Grid::from_fn(20, 20, |x, y| x == y && x > 2 && x < 17);
        assert_eq!(thin(&g).into_flags(), g);
    }

    #[test]
    fn empty_stays_empty() {
        let g = Grid::filled(10, 10, false);
        assert_eq!(thin(&g).pixel_count(), 0);
    }

    #[test]
    fn square_survives() {
        let g = Grid::from_fn(6, 6, |x, y| (2..4).contains(&x) && (2..4).contains(&y));
        let s = thin(&g);
        assert_eq!(components(s.flags()), 1);
        assert!(s.pixel_count() >= 1);
    }

    #[test]
    fn random_blobs_keep_topology() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let g = random_blobs(&mut rng);
            let s = thin(&g);
            assert!(is_thin(s.flags()));
            assert_eq!(components(&g), components(s.flags()));
            assert_eq!(thin(s.flags()), s, "not idempotent");
            // skeleton stays inside the original shape
            for (a, b) in s.flags().as_slice().iter().zip(g.as_slice()) {
                assert!(!a || *b);
            }
        }
    }

    #[test]
    fn non_thin_rejected() {
        let g = Grid::from_fn(5, 5, |x, y| x < 2 && y < 2);
        assert!(matches!(SkeletonImage::new(g), Err(Error::SkeletonNotThin { .. })));
    }
}
