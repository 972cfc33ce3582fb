use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::distance::erode_mask;
use crate::error::{Error, Result};
use crate::raster::{Minutia, MinutiaSet, SegmentationMask};

/// Raw detection counts; summed across images before ratios are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), Add::add)
    }
}

impl Counts {
    pub fn report(self) -> EvalReport {
        prf1(self.tp, self.fp, self.fn_)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 with every 0/0 taken as 0.
pub fn prf1(tp: usize, fp: usize, fn_: usize) -> EvalReport {
    EvalReport {
        tp,
        fp,
        fn_,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
    }
}

/// Drops minutiae closer than `margin` pixels to the mask boundary.
pub fn exclude_boundary(minutiae: &[Minutia], mask: &SegmentationMask, margin: f64) -> Result<MinutiaSet> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::param(format!("margin must be non-negative, got {margin}")));
    }
    let inner = erode_mask(mask, margin);
    Ok(minutiae.iter().filter(|m| inner.contains(m.x, m.y)).copied().collect())
}
