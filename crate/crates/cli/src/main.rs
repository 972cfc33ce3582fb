use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fpenhance::augment::{augment, AugmentSpec, Sample};
use fpenhance::codec::{
    read_frequency, read_gray_png, read_mask_png, read_minutiae, read_orientation, write_frequency, write_gray_png,
    write_mask_png, write_minutiae, write_orientation,
};
use fpenhance::enhance::{enhance_gbfen, gt_enhance_with, EnhanceOptions, OutputMode, Strategy};
use fpenhance::eval::{exclude_boundary, parse_values, sweep, sweep_csv, SweepAxis, TypeMode};
use fpenhance::fields::{estimate_frequency, estimate_orientation, frequency_from_skeleton, SkeletonFrequencyParams};
use fpenhance::gabor::{build_bank, dump_bank};
use fpenhance::minutiae::{binarize, detect_minutiae, thin, DetectParams};
use fpenhance::pipeline::{evaluate_dataset, load_manifest, run_pipeline, DatasetItem, EvalConfig, PipelineConfig};
use fpenhance::{EnhancedImage, FrequencyMap, OrientationField};

#[derive(Parser)]
#[command(name = "fpen", about = "Contextual Gabor fingerprint enhancement and evaluation", disable_version_flag = true)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Pipeline configuration JSON; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the version and the fingerprint of the resolved configuration.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance a fingerprint, estimating any field that is not supplied.
    Enhance(EnhanceArgs),
    /// Render a ground-truth enhanced image from a ridge skeleton.
    GtEnhance(GtEnhanceArgs),
    /// Estimate orientation and frequency fields.
    Fields(FieldsArgs),
    /// Extract minutiae from an enhanced image.
    Minutiae(MinutiaeArgs),
    /// Score predicted minutiae against ground truth.
    Evaluate(EvaluateArgs),
    /// Evaluate over a range of matching thresholds.
    Sweep(SweepArgs),
    /// Produce augmented copies of training samples.
    Augment(AugmentArgs),
    /// Inspect the Gabor filter bank.
    Bank(BankArgs),
    /// Run the whole pipeline over a manifest.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Binary,
    Response,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Naive,
    Grouped,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    orient: Option<PathBuf>,
    #[arg(long)]
    freq: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GtEnhanceArgs {
    #[arg(long)]
    skeleton: PathBuf,
    #[arg(long)]
    orient: PathBuf,
    /// Derived from the skeleton when omitted.
    #[arg(long)]
    freq: Option<PathBuf>,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the frequency map that was used.
    #[arg(long)]
    freq_out: Option<PathBuf>,
}

#[derive(Args)]
struct FieldsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    orient_out: PathBuf,
    #[arg(long)]
    freq_out: PathBuf,
}

#[derive(Args)]
struct MinutiaeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    min_spur: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TypeArg {
    Exact,
    Agnostic,
}

#[derive(Args)]
struct MatchArgs {
    /// Directory of predicted `<name>.min` files.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth `<name>.min` files.
    #[arg(long)]
    gt: PathBuf,
    /// Directory of `<name>.png` masks.
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    td: Option<f64>,
    #[arg(long)]
    ttheta_deg: Option<f64>,
    #[arg(long = "type", value_enum)]
    type_mode: Option<TypeArg>,
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    m: MatchArgs,
    /// JSON object mapping image names to quality groups.
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Td,
    Ttheta,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    m: MatchArgs,
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// `start:stop:step` or a comma list; degrees for the angle axis.
    #[arg(long)]
    values: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    /// A sample directory (image.png, mask.png, orient.ofd, freq.fqm and
    /// optionally skeleton.png) or a directory of such directories.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Augmented copies per sample.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BankArgs {
    /// Write every kernel as a PNG plus manifest.json.
    #[arg(long)]
    dump: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Per-stage wall-clock timings (kept out of the report).
    #[arg(long)]
    timings: Option<PathBuf>,
    /// Directory for enhanced images and minutiae files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, requires = "sweep_values")]
    sweep_axis: Option<AxisArg>,
    #[arg(long, requires = "sweep_out")]
    sweep_values: Option<String>,
    #[arg(long)]
    sweep_out: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn enhance_options(cfg: &PipelineConfig, mode: Option<ModeArg>, strategy: Option<StrategyArg>) -> EnhanceOptions {
    let mut o = cfg.enhance;
    match mode {
        Some(ModeArg::Binary) => o.mode = OutputMode::Binary,
        Some(ModeArg::Response) => o.mode = OutputMode::Response,
        None => {}
    }
    match strategy {
        Some(StrategyArg::Naive) => o.strategy = Strategy::Naive,
        Some(StrategyArg::Grouped) => o.strategy = Strategy::Grouped,
        None => {}
    }
    o
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_enhance(cfg: &PipelineConfig, a: &EnhanceArgs) -> Result<()> {
    let image = read_gray_png(&a.input)?;
    let mask = read_mask_png(&a.mask)?;
    let orient: OrientationField<f64> = match &a.orient {
        Some(p) => read_orientation(p)?,
        None => estimate_orientation(&image, &mask, &cfg.estimators.orientation)?.field,
    };
    let freq: FrequencyMap<f64> = match &a.freq {
        Some(p) => read_frequency(p)?,
        None => estimate_frequency(&image, &mask, &orient, &cfg.estimators.frequency)?,
    };
    let bank = build_bank(&cfg.bank)?;
    let out = enhance_gbfen(&image, &mask, &orient, &freq, &bank, enhance_options(cfg, a.mode, a.strategy))?;
    write_gray_png(&a.out, &out.to_gray())?;
    Ok(())
}

fn cmd_gt_enhance(cfg: &PipelineConfig, a: &GtEnhanceArgs) -> Result<()> {
    let skeleton = read_gray_png(&a.skeleton)?;
    let mask = read_mask_png(&a.mask)?;
    let orient: OrientationField<f64> = read_orientation(&a.orient)?;
    let freq = match &a.freq {
        Some(p) => read_frequency(p)?,
        None => {
            let sf = frequency_from_skeleton(&skeleton, &orient, &mask, &SkeletonFrequencyParams::default())?;
            if sf.fallback {
                eprintln!("warning: no ridge spacing measurable in the skeleton; using the fallback period");
            }
            sf.map
        }
    };
    if let Some(p) = &a.freq_out {
        write_frequency(p, &freq)?;
    }
    let bank = build_bank(&cfg.bank)?;
    let out = gt_enhance_with(&skeleton, &orient, &freq, &mask, &bank, enhance_options(cfg, a.mode, None))?;
    write_gray_png(&a.out, &out.to_gray())?;
    Ok(())
}

fn cmd_fields(cfg: &PipelineConfig, a: &FieldsArgs) -> Result<()> {
    let image = read_gray_png(&a.input)?;
    let mask = read_mask_png(&a.mask)?;
    let est = estimate_orientation::<f64>(&image, &mask, &cfg.estimators.orientation)?;
    let freq = estimate_frequency(&image, &mask, &est.field, &cfg.estimators.frequency)?;
    write_orientation(&a.orient_out, &est.field)?;
    write_frequency(&a.freq_out, &freq)?;
    Ok(())
}

fn cmd_minutiae(cfg: &PipelineConfig, a: &MinutiaeArgs) -> Result<()> {
    let enhanced = EnhancedImage::<f64>::from_gray(&read_gray_png(&a.input)?);
    let mask = read_mask_png(&a.mask)?;
    let params = DetectParams {
        min_spur: a.min_spur.unwrap_or(cfg.detect.min_spur),
        ..cfg.detect
    };
    let skeleton = thin(&binarize(&enhanced, cfg.binarize_threshold));
    let found = detect_minutiae(&skeleton, &mask, &params)?;
    write_minutiae(&a.out, &found)?;
    Ok(())
}

fn eval_config(cfg: &PipelineConfig, m: &MatchArgs) -> Result<EvalConfig> {
    let mut e = cfg.eval;
    if let Some(v) = m.td {
        e.tau_d = v;
    }
    if let Some(v) = m.ttheta_deg {
        e.tau_theta = v.to_radians();
    }
    match m.type_mode {
        Some(TypeArg::Exact) => e.type_mode = TypeMode::Exact,
        Some(TypeArg::Agnostic) => e.type_mode = TypeMode::Agnostic,
        None => {}
    }
    if let Some(v) = m.margin {
        e.margin = v;
    }
    e.validate()?;
    Ok(e)
}

/// Pairs up `<name>.min` files present in both directories, sorted by name.
fn load_dataset(m: &MatchArgs, groups: Option<&serde_json::Map<String, serde_json::Value>>) -> Result<Vec<DatasetItem>> {
    let mut names: Vec<String> = fs::read_dir(&m.gt)
        .with_context(|| format!("reading {}", m.gt.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "min"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    names.sort();
    let mut items = Vec::new();
    for name in names {
        let pred_path = m.pred.join(format!("{name}.min"));
        if !pred_path.exists() {
            eprintln!("warning: no prediction for {name}; skipped");
            continue;
        }
        let group = groups.and_then(|g| g.get(&name)).and_then(|v| v.as_str()).map(str::to_string);
        items.push(DatasetItem {
            pred: read_minutiae(&pred_path)?,
            gt: read_minutiae(m.gt.join(format!("{name}.min")))?,
            mask: read_mask_png(m.mask.join(format!("{name}.png")))?,
            name,
            group,
        });
    }
    if items.is_empty() {
        bail!("no inputs");
    }
    Ok(items)
}

fn cmd_evaluate(cfg: &PipelineConfig, a: &EvaluateArgs) -> Result<()> {
    let eval = eval_config(cfg, &a.m)?;
    let groups: Option<serde_json::Map<String, serde_json::Value>> = match &a.groups {
        Some(p) => Some(serde_json::from_slice(&fs::read(p)?).context("group manifest must be a JSON object")?),
        None => None,
    };
    let items = load_dataset(&a.m, groups.as_ref())?;
    let report = evaluate_dataset(&items, &eval)?;
    let r = &report.aggregate;
    println!(
        "tp={} fp={} fn={} precision={:.4} recall={:.4} f1={:.4}",
        r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1
    );
    for g in &report.groups {
        println!("{}: f1={:.4} ({} images)", g.group, g.report.f1, g.images);
    }
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    Ok(())
}

fn cmd_sweep(cfg: &PipelineConfig, a: &SweepArgs) -> Result<()> {
    let eval = eval_config(cfg, &a.m)?;
    let items = load_dataset(&a.m, None)?;
    let mut values = parse_values(&a.values)?;
    let axis = match a.axis {
        AxisArg::Td => SweepAxis::TauD,
        AxisArg::Ttheta => {
            values.iter_mut().for_each(|v| *v = v.to_radians());
            SweepAxis::TauTheta
        }
    };
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for it in &items {
        preds.push(exclude_boundary(&it.pred, &it.mask, eval.margin)?);
        gts.push(exclude_boundary(&it.gt, &it.mask, eval.margin)?);
    }
    let points = sweep(&preds, &gts, &eval.criteria(), axis, &values)?;
    let csv = sweep_csv(axis, &points);
    match &a.out {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn read_sample(dir: &Path) -> Result<Sample<f64>> {
    let skel = dir.join("skeleton.png");
    Ok(Sample {
        image: read_gray_png(dir.join("image.png"))?,
        mask: read_mask_png(dir.join("mask.png"))?,
        orient: read_orientation(dir.join("orient.ofd"))?,
        freq: read_frequency(dir.join("freq.fqm"))?,
        skeleton: if skel.exists() { Some(read_gray_png(skel)?) } else { None },
    })
}

fn write_sample(dir: &Path, s: &Sample<f64>) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_gray_png(dir.join("image.png"), &s.image)?;
    write_mask_png(dir.join("mask.png"), &s.mask)?;
    write_orientation(dir.join("orient.ofd"), &s.orient)?;
    write_frequency(dir.join("freq.fqm"), &s.freq)?;
    if let Some(sk) = &s.skeleton {
        write_gray_png(dir.join("skeleton.png"), sk)?;
    }
    Ok(())
}

fn cmd_augment(a: &AugmentArgs) -> Result<()> {
    let mut spec: AugmentSpec = match &a.spec {
        Some(p) => serde_json::from_slice(&fs::read(p)?).with_context(|| format!("reading spec {}", p.display()))?,
        None => AugmentSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let samples: Vec<PathBuf> = if a.input.join("image.png").exists() {
        vec![a.input.clone()]
    } else {
        let mut dirs: Vec<PathBuf> = fs::read_dir(&a.input)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.join("image.png").exists())
            .collect();
        dirs.sort();
        dirs
    };
    if samples.is_empty() {
        bail!("no inputs");
    }
    let mut failures = 0;
    for dir in &samples {
        let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sample".into());
        let sample = read_sample(dir).with_context(|| format!("reading sample {}", dir.display()))?;
        for k in 0..a.count {
            let s = AugmentSpec {
                seed: spec.seed.wrapping_add(k),
                ..spec.clone()
            };
            match augment(&sample, &s) {
                Ok(out) => write_sample(&a.out.join(format!("{name}_{k:03}")), &out)?,
                Err(e) => {
                    eprintln!("{name} #{k}: {e}");
                    failures += 1;
                }
            }
        }
    }
    if failures as u64 == samples.len() as u64 * a.count {
        bail!("every augmentation failed");
    }
    Ok(())
}

fn cmd_bank(cfg: &PipelineConfig, a: &BankArgs) -> Result<()> {
    let bank = build_bank::<f64>(&cfg.bank)?;
    let entries = dump_bank(&bank, &a.dump)?;
    println!("wrote {} kernels to {}", entries.len(), a.dump.display());
    Ok(())
}

fn cmd_run(cfg: &PipelineConfig, a: &RunArgs) -> Result<ExitCode> {
    let mut cfg = cfg.clone();
    if a.out_dir.is_some() {
        cfg.output_dir = a.out_dir.clone();
    }
    let entries = load_manifest(&a.manifest).with_context(|| format!("reading manifest {}", a.manifest.display()))?;
    let run = run_pipeline(&cfg, &entries)?;
    fs::write(&a.report, run.report.to_json())?;
    if let Some(p) = &a.timings {
        write_json(p, &run.timings)?;
    }
    for img in &run.report.images {
        if let Some(e) = &img.error {
            eprintln!("{}: {e}", img.name);
        }
    }
    if let (Some(axis), Some(values), Some(out)) = (a.sweep_axis, &a.sweep_values, &a.sweep_out) {
        let mut values = parse_values(values)?;
        let axis = match axis {
            AxisArg::Td => SweepAxis::TauD,
            AxisArg::Ttheta => {
                values.iter_mut().for_each(|v| *v = v.to_radians());
                SweepAxis::TauTheta
            }
        };
        let (mut preds, mut gts) = (Vec::new(), Vec::new());
        for (e, (found, img)) in entries.iter().zip(run.minutiae.iter().zip(&run.report.images)) {
            let Some(gt_path) = &e.gt_minutiae else { continue };
            if img.error.is_some() {
                continue;
            }
            let mask = read_mask_png(&e.mask)?;
            preds.push(exclude_boundary(found, &mask, cfg.eval.margin)?);
            gts.push(exclude_boundary(&read_minutiae(gt_path)?, &mask, cfg.eval.margin)?);
        }
        fs::write(out, sweep_csv(axis, &sweep(&preds, &gts, &cfg.eval.criteria(), axis, &values)?))?;
    }
    if let Some(agg) = &run.report.aggregate {
        println!("f1={:.4} precision={:.4} recall={:.4}", agg.f1, agg.precision, agg.recall);
    }
    Ok(if run.report.all_failed() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    if cli.version {
        println!("fpen {}", env!("CARGO_PKG_VERSION"));
        println!("config fingerprint {}", cfg.fingerprint());
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let Some(command) = &cli.command else {
        bail!("no command given; see --help");
    };
    match command {
        Command::Enhance(a) => cmd_enhance(&cfg, a)?,
        Command::GtEnhance(a) => cmd_gt_enhance(&cfg, a)?,
        Command::Fields(a) => cmd_fields(&cfg, a)?,
        Command::Minutiae(a) => cmd_minutiae(&cfg, a)?,
        Command::Evaluate(a) => cmd_evaluate(&cfg, a)?,
        Command::Sweep(a) => cmd_sweep(&cfg, a)?,
        Command::Augment(a) => cmd_augment(a)?,
        Command::Bank(a) => cmd_bank(&cfg, a)?,
        Command::Run(a) => return cmd_run(&cfg, a),
    }
    Ok(ExitCode::SUCCESS)
}
