//! Minutiae extraction from near-binary enhanced images: binarization,
//! thinning and crossing-number analysis.

mod detect;
mod thin;

pub use detect::{crossing_number, detect_minutiae, DetectParams};
pub use thin::{binarize, is_simple, is_thin, thin, SkeletonImage};

use crate::raster::Grid;

/// Clockwise 8-neighborhood starting north: N, NE, E, SE, S, SW, W, NW.
pub(crate) const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

/// Neighbor flags in [`RING`] order; outside the grid reads as background.
pub(crate) fn ring(g: &Grid<bool>, x: usize, y: usize) -> [bool; 8] {
    let mut out = [false; 8];
    for (k, (dx, dy)) in RING.iter().enumerate() {
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        out[k] = g.in_bounds(nx, ny) && g.get(nx as usize, ny as usize);
    }
    out
}
