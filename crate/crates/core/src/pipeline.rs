//! End-to-end batch processing: load, estimate or load fields, enhance,
//! extract minutiae, drop boundary minutiae, match against ground truth and
//! aggregate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{read_frequency, read_gray_png, read_mask_png, read_minutiae, read_orientation, write_gray_png, write_minutiae};
use crate::enhance::{enhance_gbfen, EnhanceOptions};
use crate::error::{Error, Result};
use crate::eval::{exclude_boundary, match_minutiae_with, Assignment, Counts, EvalReport, MatchCriteria, TypeMode};
use crate::fields::{estimate_frequency, estimate_orientation, FrequencyParams, OrientationParams};
use crate::gabor::{build_bank, BankParams, GaborBank};
use crate::minutiae::{binarize, detect_minutiae, thin, DetectParams};
use crate::raster::{MinutiaSet, SegmentationMask};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub orientation: OrientationParams,
    pub frequency: FrequencyParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub tau_d: f64,
    pub tau_theta: f64,
    pub type_mode: TypeMode,
    /// Minutiae closer than this to the mask boundary are ignored.
    pub margin: f64,
    pub assignment: Assignment,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let c = MatchCriteria::default();
        Self {
            tau_d: c.tau_d,
            tau_theta: c.tau_theta,
            type_mode: c.type_mode,
            margin: 14.0,
            assignment: Assignment::Greedy,
        }
    }
}

impl EvalConfig {
    pub fn criteria(&self) -> MatchCriteria {
        MatchCriteria {
            tau_d: self.tau_d,
            tau_theta: self.tau_theta,
            type_mode: self.type_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.criteria().validate()?;
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::param(format!("margin must be non-negative, got {}", self.margin)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub bank: BankParams,
    pub estimators: EstimatorConfig,
    pub enhance: EnhanceOptions,
    pub binarize_threshold: f64,
    pub detect: DetectParams,
    pub eval: EvalConfig,
    /// Worker threads; 0 picks the rayon default.
    #[serde(skip_serializing_if = "is_zero")]
    pub threads: usize,
    /// Where enhanced images and minutiae files go, if anywhere.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bank: BankParams::default(),
            estimators: EstimatorConfig::default(),
            enhance: EnhanceOptions::default(),
            binarize_threshold: 0.5,
            detect: DetectParams::default(),
            eval: EvalConfig::default(),
            threads: 0,
            output_dir: None,
        }
    }
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl PipelineConfig {
    /// The settings that determine results; execution settings (threads,
    /// output location) are cleared.
    pub fn resolved(&self) -> Self {
        Self {
            threads: 0,
            output_dir: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bank.validate()?;
        self.estimators.orientation.validate()?;
        self.estimators.frequency.validate()?;
        self.eval.validate()?;
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold <= 1.0) {
            return Err(Error::param(format!("binarize_threshold must lie in (0, 1], got {}", self.binarize_threshold)));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_slice(&fs::read(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the parameters that determine outputs (threads and output
    /// location excluded), as lowercase hex.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.resolved()).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One fingerprint of a batch. Relative paths are resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub image: PathBuf,
    pub mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orient: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_minutiae: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let mut entries: Vec<ManifestEntry> = serde_json::from_slice(&fs::read(path)?)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    for e in &mut entries {
        fix(&mut e.image);
        fix(&mut e.mask);
        for p in [&mut e.orient, &mut e.freq, &mut e.gt_minutiae].into_iter().flatten() {
            fix(p);
        }
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: String,
    pub images: usize,
    #[serde(flatten)]
    pub report: EvalReport,
}

/// Per-group micro-averaged reports. The quality groups "Good", "Bad" and
/// "Ugly" come first in that order, any other labels follow alphabetically.
pub fn group_reports<'a>(items: impl IntoIterator<Item = (Option<&'a str>, Counts)>) -> Vec<GroupReport> {
    let mut acc: BTreeMap<&str, (usize, Counts)> = BTreeMap::new();
    for (g, c) in items {
        if let Some(g) = g {
            let e = acc.entry(g).or_default();
            e.0 += 1;
            e.1 += c;
        }
    }
    let rank = |g: &str| ["Good", "Bad", "Ugly"].iter().position(|&q| q == g).unwrap_or(3);
    let mut out: Vec<GroupReport> = acc
        .into_iter()
        .map(|(g, (n, c))| GroupReport {
            group: g.to_string(),
            images: n,
            report: c.report(),
        })
        .collect();
    out.sort_by(|a, b| rank(&a.group).cmp(&rank(&b.group)).then(a.group.cmp(&b.group)));
    out
}

/// Matches one image's minutiae after removing those near the mask boundary.
pub fn evaluate_image(pred: &[crate::raster::Minutia], gt: &[crate::raster::Minutia], mask: &SegmentationMask, eval: &EvalConfig) -> Result<Counts> {
    let p = exclude_boundary(pred, mask, eval.margin)?;
    let g = exclude_boundary(gt, mask, eval.margin)?;
    let m = match_minutiae_with(&p, &g, &eval.criteria(), eval.assignment);
    Ok(Counts {
        tp: m.tp(),
        fp: m.fp(),
        fn_: m.fn_(),
    })
}

/// Predicted and ground-truth minutiae of one image, for evaluation of
/// precomputed results.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub name: String,
    pub group: Option<String>,
    pub pred: MinutiaSet,
    pub gt: MinutiaSet,
    pub mask: SegmentationMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEval {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub eval: EvalConfig,
    pub aggregate: EvalReport,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub groups: Vec<GroupReport>,
    pub images: Vec<ImageEval>,
}

/// Micro-averaged evaluation over a dataset, with per-image and per-group
/// breakdowns.
pub fn evaluate_dataset(items: &[DatasetItem], eval: &EvalConfig) -> Result<DatasetReport> {
    eval.validate()?;
    if items.is_empty() {
        return Err(Error::NoInputs);
    }
    let counts = items
        .par_iter()
        .map(|it| evaluate_image(&it.pred, &it.gt, &it.mask, eval))
        .collect::<Result<Vec<Counts>>>()?;
    Ok(DatasetReport {
        eval: *eval,
        aggregate: counts.iter().copied().sum::<Counts>().report(),
        groups: group_reports(items.iter().map(|it| it.group.as_deref()).zip(counts.iter().copied())),
        images: items
            .iter()
            .zip(&counts)
            .map(|(it, c)| ImageEval {
                name: it.name.clone(),
                group: it.group.clone(),
                report: c.report(),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// "estimated" or "loaded".
    pub fields: String,
    pub minutiae: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub load_ms: f64,
    pub fields_ms: f64,
    pub enhance_ms: f64,
    pub minutiae_ms: f64,
    pub evaluate_ms: f64,
    pub total_ms: f64,
}

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.load_ms + self.fields_ms + self.enhance_ms + self.minutiae_ms + self.evaluate_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEntry {
    pub name: String,
    #[serde(flatten)]
    pub timings: StageTimings,
}

/// Deterministic part of a run: identical inputs give byte-identical JSON
/// whatever the thread count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub version: String,
    pub fingerprint: String,
    pub config: PipelineConfig,
    pub processed: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<EvalReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub groups: Vec<GroupReport>,
    pub images: Vec<ImageResult>,
}

impl PipelineReport {
    pub fn all_failed(&self) -> bool {
        self.failed == self.images.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: PipelineReport,
    /// Wall-clock stage timings, kept apart from the report so that the
    /// report stays reproducible.
    pub timings: Vec<TimingEntry>,
    /// Extracted minutiae per image (empty for failed images).
    pub minutiae: Vec<MinutiaSet>,
}

struct Processed {
    result: ImageResult,
    counts: Option<Counts>,
    timings: StageTimings,
    minutiae: MinutiaSet,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn process(entry: &ManifestEntry, config: &PipelineConfig, bank: &GaborBank<f64>) -> Result<(ImageResult, Option<Counts>, StageTimings, MinutiaSet)> {
    let start = Instant::now();
    let mut tm = StageTimings::default();

    let t = Instant::now();
    let image = read_gray_png(&entry.image)?;
    let mask = read_mask_png(&entry.mask)?;
    let (w, h) = image.dims();
    mask.check_dims("mask", w, h)?;
    let gt = entry.gt_minutiae.as_ref().map(read_minutiae).transpose()?;
    let loaded_orient = entry.orient.as_ref().map(read_orientation::<f64>).transpose()?;
    let loaded_freq = entry.freq.as_ref().map(read_frequency::<f64>).transpose()?;
    tm.load_ms = ms(t);

    let t = Instant::now();
    let loaded = loaded_orient.is_some() && loaded_freq.is_some();
    let orient = match loaded_orient {
        Some(o) => o,
        None => estimate_orientation::<f64>(&image, &mask, &config.estimators.orientation)?.field,
    };
    let freq = match loaded_freq {
        Some(f) => f,
        None => estimate_frequency(&image, &mask, &orient, &config.estimators.frequency)?,
    };
    tm.fields_ms = ms(t);

    let t = Instant::now();
    let enhanced = enhance_gbfen(&image, &mask, &orient, &freq, bank, config.enhance)?;
    tm.enhance_ms = ms(t);

    let t = Instant::now();
    let skeleton = thin(&binarize(&enhanced, config.binarize_threshold));
    let found = detect_minutiae(&skeleton, &mask, &config.detect)?;
    tm.minutiae_ms = ms(t);

    let t = Instant::now();
    let counts = gt.map(|g| evaluate_image(&found, &g, &mask, &config.eval)).transpose()?;
    if let Some(dir) = &config.output_dir {
        write_gray_png(dir.join(format!("{}_enhanced.png", entry.name)), &enhanced.to_gray())?;
        write_minutiae(dir.join(format!("{}.min", entry.name)), &found)?;
    }
    tm.evaluate_ms = ms(t);
    tm.total_ms = ms(start);

    let result = ImageResult {
        name: entry.name.clone(),
        group: entry.group.clone(),
        fields: if loaded { "loaded" } else { "estimated" }.to_string(),
        minutiae: found.len(),
        report: counts.map(Counts::report),
        error: None,
    };
    Ok((result, counts, tm, found))
}

fn process_or_report(entry: &ManifestEntry, config: &PipelineConfig, bank: &GaborBank<f64>) -> Processed {
    match process(entry, config, bank) {
        Ok((result, counts, timings, minutiae)) => Processed {
            result,
            counts,
            timings,
            minutiae,
        },
        Err(e) => Processed {
            result: ImageResult {
                name: entry.name.clone(),
                group: entry.group.clone(),
                fields: String::new(),
                minutiae: 0,
                report: None,
                error: Some(e.to_string()),
            },
            counts: None,
            timings: StageTimings::default(),
            minutiae: Vec::new(),
        },
    }
}

/// Runs every manifest entry, in parallel across files. Per-file failures
/// are recorded in the report rather than aborting the batch.
pub fn run_pipeline(config: &PipelineConfig, entries: &[ManifestEntry]) -> Result<PipelineRun> {
    config.validate()?;
    if entries.is_empty() {
        return Err(Error::NoInputs);
    }
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir)?;
    }
    let bank = build_bank::<f64>(&config.bank)?;
    let work = || -> Vec<Processed> { entries.par_iter().map(|e| process_or_report(e, config, &bank)).collect() };
    let processed = if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::param(format!("thread pool: {e}")))?
            .install(work)
    } else {
        work()
    };

    let evaluated: Vec<&Processed> = processed.iter().filter(|p| p.counts.is_some()).collect();
    let aggregate = (!evaluated.is_empty()).then(|| evaluated.iter().map(|p| p.counts.unwrap()).sum::<Counts>().report());
    let groups = group_reports(evaluated.iter().map(|p| (p.result.group.as_deref(), p.counts.unwrap())));
    let failed = processed.iter().filter(|p| p.result.error.is_some()).count();
    let report = PipelineReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        fingerprint: config.fingerprint(),
        config: config.resolved(),
        processed: processed.len() - failed,
        failed,
        aggregate,
        groups,
        images: processed.iter().map(|p| p.result.clone()).collect(),
    };
    let timings = processed
        .iter()
        .map(|p| TimingEntry {
            name: p.result.name.clone(),
            timings: p.timings,
        })
        .collect();
    let minutiae = processed.into_iter().map(|p| p.minutiae).collect();
    Ok(PipelineRun { report, timings, minutiae })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_with_defaults() {
        let cfg: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        let text = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(text.contains("\"tau_d\":14.0"), "{text}");
        let partial: PipelineConfig = serde_json::from_str(r#"{"eval": {"tau_d": 10, "type_mode": "agnostic"}, "threads": 2}"#).unwrap();
        assert_eq!(partial.eval.tau_d, 10.0);
        assert_eq!(partial.eval.margin, 14.0);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.eval.tau_d = -1.0;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            bank: BankParams {
                orientation_count: 0,
                periods: vec![9.0],
            },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fingerprint_ignores_threads_only() {
        let a = PipelineConfig::default();
        let b = PipelineConfig { threads: 7, ..a.clone() };
        let mut c = a.clone();
        c.bank.orientation_count = 8;
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn empty_manifest() {
        let err = run_pipeline(&PipelineConfig::default(), &[]).unwrap_err();
        assert_eq!(err.to_string(), "no inputs");
    }

    #[test]
    fn group_order() {
        let c = |tp| Counts { tp, fp: 1, fn_: 0 };
        let g = group_reports([(Some("Ugly"), c(1)), (Some("Good"), c(2)), (None, c(5)), (Some("Bad"), c(0)), (Some("Good"), c(1)), (Some("Extra"), c(1))]);
        let names: Vec<&str> = g.iter().map(|r| r.group.as_str()).collect();
        assert_eq!(names, ["Good", "Bad", "Ugly", "Extra"]);
        assert_eq!(g[0].images, 2);
        assert_eq!(g[0].report.tp, 3);
    }
}
