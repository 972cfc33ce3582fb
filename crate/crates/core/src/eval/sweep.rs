use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::matching::{match_minutiae, MatchCriteria};
use super::metrics::{Counts, EvalReport};
use crate::error::{Error, Result};
use crate::raster::MinutiaSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TauD,
    TauTheta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::TauD => "tau_d",
            SweepAxis::TauTheta => "tau_theta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: EvalReport,
}

/// Evaluates every image at each threshold value and aggregates the counts.
pub fn sweep(
    pred_sets: &[MinutiaSet],
    gt_sets: &[MinutiaSet],
    base: &MatchCriteria,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    if pred_sets.len() != gt_sets.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predicted sets against {} ground-truth sets",
            pred_sets.len(),
            gt_sets.len()
        )));
    }
    values
        .iter()
        .map(|&value| {
            let mut crit = *base;
            match axis {
                SweepAxis::TauD => crit.tau_d = value,
                SweepAxis::TauTheta => crit.tau_theta = value,
            }
            crit.validate()?;
            let counts: Counts = pred_sets
                .iter()
                .zip(gt_sets)
                .map(|(p, g)| {
                    let m = match_minutiae(p, g, &crit);
                    Counts {
                        tp: m.tp(),
                        fp: m.fp(),
                        fn_: m.fn_(),
                    }
                })
                .sum();
            Ok(SweepPoint {
                value,
                report: counts.report(),
            })
        })
        .collect()
}

pub fn sweep_csv(axis: SweepAxis, points: &[SweepPoint]) -> String {
    let mut out = format!("{},tp,fp,fn,precision,recall,f1\n", axis.name());
    for p in points {
        let r = &p.report;
        writeln!(out, "{},{},{},{},{:.6},{:.6},{:.6}", p.value, r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1).unwrap();
    }
    out
}

/// Parses `start:stop:step` (inclusive of `stop`) or a comma-separated list.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::param(format!("bad number {s:?} in {text:?}")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 || stop < start {
                return Err(Error::param(format!("empty range {text:?}")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| start + k as f64 * step).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(Error::param(format!("expected start:stop:step or a list, got {text:?}"))),
    }
}
