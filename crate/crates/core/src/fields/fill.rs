use crate::raster::Grid;
use crate::scalar::Real;

/// Fills invalid cells layer by layer: each pass assigns every invalid cell
/// touching at least one valid 8-neighbor the mean of those neighbors, then
/// marks it valid. Returns the number of cells filled; cells unreachable
/// from any valid cell stay invalid.
pub fn fill_from_valid<T: Real>(values: &mut Grid<T>, valid: &mut Grid<bool>) -> usize {
    let (w, h) = values.dims();
    let mut frontier: Vec<usize> = (0..w * h)
        .filter(|&i| !valid.as_slice()[i] && has_valid_neighbor(valid, i % w, i / w))
        .collect();
    let mut filled = 0;
    let mut queued = Grid::filled(w, h, false);
    while !frontier.is_empty() {
        let updates: Vec<(usize, T)> = frontier
            .iter()
            .map(|&i| {
                let (x, y) = (i % w, i / w);
                let mut sum = T::zero();
                let mut n = 0usize;
                for_neighbors(w, h, x, y, |nx, ny| {
                    if valid.get(nx, ny) {
                        sum += values.get(nx, ny);
                        n += 1;
                    }
                });
                (i, sum / T::of_usize(n))
            })
            .collect();
        for &(i, v) in &updates {
            values.as_mut_slice()[i] = v;
            valid.as_mut_slice()[i] = true;
        }
        filled += updates.len();
        let mut next = Vec::new();
        for &(i, _) in &updates {
            let (x, y) = (i % w, i / w);
            for_neighbors(w, h, x, y, |nx, ny| {
                let j = ny * w + nx;
                if !valid.get(nx, ny) && !queued.as_slice()[j] {
                    queued.as_mut_slice()[j] = true;
                    next.push(j);
                }
            });
        }
        next.sort_unstable();
        frontier = next;
    }
    filled
}

fn has_valid_neighbor(valid: &Grid<bool>, x: usize, y: usize) -> bool {
    let mut any = false;
    for_neighbors(valid.width(), valid.height(), x, y, |nx, ny| any |= valid.get(nx, ny));
    any
}

#[inline]
fn for_neighbors(w: usize, h: usize, x: usize, y: usize, mut f: impl FnMut(usize, usize)) {
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                f(nx as usize, ny as usize);
            }
        }
    }
}
