use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::thin::{cleanup, is_thin, SkeletonImage};
use super::{ring, RING};
use crate::error::{Error, Result};
use crate::raster::{Grid, Minutia, MinutiaKind, MinutiaSet, SegmentationMask};
use crate::scalar::direction_distance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectParams {
    /// Branches ending within this many steps of a junction (and isolated
    /// segments shorter than this) are removed before detection.
    pub min_spur: usize,
    /// Skeleton steps traced to measure a minutia direction.
    pub trace_steps: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            min_spur: 8,
            trace_steps: 8,
        }
    }
}

/// `½ Σ |n_k − n_{k+1}|` around the 8-neighborhood.
pub fn crossing_number(g: &Grid<bool>, x: usize, y: usize) -> u32 {
    let n = ring(g, x, y);
    (0..8).filter(|&k| n[k] != n[(k + 1) % 8]).count() as u32 / 2
}

fn neighbor_count(g: &Grid<bool>, x: usize, y: usize) -> usize {
    ring(g, x, y).iter().filter(|&&b| b).count()
}

fn step(p: (usize, usize), k: usize) -> (isize, isize) {
    (p.0 as isize + RING[k].0, p.1 as isize + RING[k].1)
}

enum Stop {
    /// Reached a pixel with three or more neighbors.
    Junction,
    /// Ran out of skeleton.
    End,
    /// Walked the full step budget.
    Budget,
}

/// Follows the skeleton from `path[0]` through `path[1]` (if given),
/// never revisiting pixels in `blocked` or on the path.
fn trace(g: &Grid<bool>, mut path: Vec<(usize, usize)>, blocked: &[(usize, usize)], budget: usize) -> (Vec<(usize, usize)>, Stop) {
    loop {
        if path.len() > budget {
            return (path, Stop::Budget);
        }
        let cur = *path.last().unwrap();
        if path.len() > 1 && neighbor_count(g, cur.0, cur.1) >= 3 {
            return (path, Stop::Junction);
        }
        let next: Vec<(usize, usize)> = (0..8)
            .filter_map(|k| {
                let (nx, ny) = step(cur, k);
                (g.in_bounds(nx, ny) && g.get(nx as usize, ny as usize)).then_some((nx as usize, ny as usize))
            })
            .filter(|p| !path.contains(p) && !blocked.contains(p))
            .collect();
        match next.len() {
            0 => return (path, Stop::End),
            1 => path.push(next[0]),
            _ => {
                // prefer the 4-neighbor when a corner offers two ways on
                let four = next.iter().find(|p| p.0 == cur.0 || p.1 == cur.1).copied();
                path.push(four.unwrap_or(next[0]));
            }
        }
    }
}

/// Removes short spurs hanging off junctions and short isolated segments.
fn prune(g: &mut Grid<bool>, min_spur: usize) {
    if min_spur == 0 {
        return;
    }
    let (w, h) = g.dims();
    let ends: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| g.get(x, y) && crossing_number(g, x, y) == 1)
        .collect();
    let mut doomed = Vec::new();
    for e in ends {
        if !g.get(e.0, e.1) {
            continue;
        }
        let (path, stop) = trace(g, vec![e], &[], min_spur);
        match stop {
            Stop::Junction => doomed.extend_from_slice(&path[..path.len() - 1]),
            Stop::End => doomed.extend_from_slice(&path),
            Stop::Budget => {}
        }
    }
    for (x, y) in doomed {
        g.set(x, y, false);
    }
    cleanup(g);
}

/// Screen-convention angle (counterclockwise, y up) of the vector `from → to`.
fn angle(from: (usize, usize), to: (usize, usize)) -> f64 {
    let dx = to.0 as f64 - from.0 as f64;
    let dy = to.1 as f64 - from.1 as f64;
    (-dy).atan2(dx)
}

/// One starting pixel per run of set neighbors around `p`.
fn branch_starts(g: &Grid<bool>, p: (usize, usize)) -> Vec<(usize, usize)> {
    let n = ring(g, p.0, p.1);
    let mut starts = Vec::new();
    for k in 0..8 {
        if n[k] && !n[(k + 7) % 8] {
            // walk the run and prefer its 4-neighbor member
            let mut best = k;
            let mut j = k;
            while n[j % 8] && j < k + 8 {
                if j % 2 == 0 {
                    best = j % 8;
                    break;
                }
                j += 1;
            }
            let (x, y) = step(p, best);
            starts.push((x as usize, y as usize));
        }
    }
    starts
}

/// Crossing-number minutiae detection.
///
/// Endings point from the minutia along their ridge. A bifurcation points
/// opposite to the mean of its two closest branches, i.e. along the third.
/// Minutiae whose pixel lies outside `mask` are dropped.
pub fn detect_minutiae(skeleton: &SkeletonImage, mask: &SegmentationMask, params: &DetectParams) -> Result<MinutiaSet> {
    let (w, h) = skeleton.flags().dims();
    mask.check_dims("mask", w, h)?;
    if !is_thin(skeleton.flags()) {
        // SkeletonImage guarantees this unless built by hand from bad flags
        return Err(Error::SkeletonNotThin { x: 0, y: 0 });
    }
    let mut g = skeleton.flags().clone();
    prune(&mut g, params.min_spur);

    let mut out = Vec::new();
    let mut bifurcations: Vec<(usize, usize)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !g.get(x, y) || !mask.get(x, y) {
                continue;
            }
            match crossing_number(&g, x, y) {
                1 => {
                    let (path, _) = trace(&g, vec![(x, y)], &[], params.trace_steps);
                    let dir = angle((x, y), *path.last().unwrap());
                    out.push(Minutia::new(x as f64, y as f64, dir, MinutiaKind::Ending));
                }
                3 => {
                    if bifurcations.iter().any(|b| b.0.abs_diff(x) <= 1 && b.1.abs_diff(y) <= 1) {
                        continue;
                    }
                    let starts = branch_starts(&g, (x, y));
                    if starts.len() != 3 {
                        continue;
                    }
                    let dirs: Vec<f64> = starts
                        .iter()
                        .map(|&s| {
                            let mut blocked: Vec<(usize, usize)> = starts.iter().copied().filter(|&o| o != s).collect();
                            blocked.push((x, y));
                            let (path, _) = trace(&g, vec![(x, y), s], &blocked, params.trace_steps);
                            angle((x, y), *path.last().unwrap())
                        })
                        .collect();
                    let pairs = [(0, 1), (0, 2), (1, 2)];
                    let &(i, j) = pairs
                        .iter()
                        .min_by(|a, b| {
                            direction_distance(dirs[a.0], dirs[a.1]).total_cmp(&direction_distance(dirs[b.0], dirs[b.1]))
                        })
                        .unwrap();
                    let mean = (dirs[i].sin() + dirs[j].sin()).atan2(dirs[i].cos() + dirs[j].cos());
                    bifurcations.push((x, y));
                    out.push(Minutia::new(x as f64, y as f64, mean + PI, MinutiaKind::Bifurcation));
                }
                _ => {}
            }
        }
    }
    Ok(out)
}
