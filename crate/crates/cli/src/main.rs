//! `bench`: build corrupted benchmark variants, score detections, profile
//! failure modes, and train/evaluate the synthetic-task detector.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use trbench_cli::{annotations, fseq, manifest, model_io, report, svg, toy, Error};
use trbench_core::corrupt::{
    CorruptionSpec, CorruptionType, PlacementPolicy, SeverityLevel,
};
use trbench_core::metrics::{
    mean_ap, robustness_report_from_maps, EvalProtocol, GridCell as MetricsCell,
};
use trbench_core::profile::{classify_false_positives, error_impact, tag_counts, FpCategory};
use trbench_core::train::pairs::DropScope;
use trbench_core::train::trainer::FrameDrop;
use trbench_core::types::{frame_span, Dataset};

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Temporal-robustness benchmarking for action detection",
    disable_help_subcommand = true
)]
struct Cli {
    /// Worker threads for dataset-level fan-out (0 = use all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a corrupted benchmark dataset with a verifiable manifest.
    Build(BuildArgs),
    /// Evaluate predictions: per-threshold mAP table and aggregate.
    Eval(EvalArgs),
    /// Merge clean and per-cell evaluations into a robustness report.
    Report(ReportArgs),
    /// Classify false positives and measure per-category mAP impact.
    Profile(ProfileArgs),
    /// mAP as a corruption window slides across action positions.
    Sweep(SweepArgs),
    /// Train the synthetic-task detector.
    TrainToy(TrainToyArgs),
    /// Evaluate a trained detector on the synthetic task.
    EvalToy(EvalToyArgs),
    /// Recompute manifest checksums and report mismatches.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Core,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolKind {
    /// Thresholds 0.1..0.5; headline mAP at tIoU 0.5.
    Thumos,
    /// Thresholds 0.5..0.95 step 0.05, averaged.
    Anet,
}

impl ProtocolKind {
    fn protocol(self) -> EvalProtocol {
        match self {
            Self::Thumos => EvalProtocol::thumos(),
            Self::Anet => EvalProtocol::activitynet(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Thumos => "thumos",
            Self::Anet => "anet",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeKind {
    /// One drop anywhere in each action-background pair.
    Abpair,
    /// Drops restricted to action frames.
    ActionOnly,
}

#[derive(Args)]
struct BuildArgs {
    /// Annotation JSON file.
    #[arg(long)]
    dataset: PathBuf,
    /// Directory holding one <video_id>.fseq per video.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, value_enum, default_value_t = GridKind::Core)]
    grid: GridKind,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Prediction JSON file.
    #[arg(long)]
    preds: PathBuf,
    #[arg(long, value_enum)]
    protocol: ProtocolKind,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Clean-data prediction JSON file.
    #[arg(long)]
    clean: PathBuf,
    /// Per-cell predictions as TYPE:LEVEL:PATH (repeatable), e.g.
    /// black_frame:1:preds_bf1.json.
    #[arg(long = "cell")]
    cells: Vec<String>,
    #[arg(long, value_enum)]
    protocol: ProtocolKind,
    /// Flag grid cells missing from --cell against this grid.
    #[arg(long, value_enum)]
    expect_grid: Option<GridKind>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    preds: PathBuf,
    /// Matching tIoU threshold.
    #[arg(long, default_value_t = 0.5)]
    thr: f64,
    /// Overlap below this counts as background.
    #[arg(long, default_value_t = trbench_core::profile::BACKGROUND_TIOU)]
    background_tiou: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// File mode: annotation JSON (requires --frames and --preds).
    #[arg(long, requires_all = ["frames", "preds"], conflicts_with_all = ["model", "config"])]
    dataset: Option<PathBuf>,
    #[arg(long)]
    frames: Option<PathBuf>,
    /// File mode: static predictions evaluated against every variant.
    #[arg(long)]
    preds: Option<PathBuf>,
    /// Toy mode: trained model file (requires --seed used at training).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Toy mode: synthetic-task config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainToyArgs {
    /// Synthetic-task config JSON (defaults apply when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Enable the FrameDrop augmentation.
    #[arg(long)]
    framedrop: bool,
    #[arg(long, value_enum, default_value_t = ScopeKind::Abpair)]
    framedrop_scope: ScopeKind,
    /// Consistency loss options, e.g. "K=16,loss=trc,sampling=center".
    #[arg(long)]
    trc: Option<String>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Training log CSV (default: <out>_log.csv).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvalToyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed used when the training dataset was generated.
    #[arg(long)]
    seed: u64,
    /// Where to write eval_toy.json (printed either way).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory entry paths are relative to (default: manifest's parent).
    #[arg(long)]
    root: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 by default; the contract here is 1 for usage errors
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if cli.jobs > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()
        {
            eprintln!("bench: --jobs: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(command: Command) -> trbench_cli::Result<ExitCode> {
    match command {
        Command::Build(args) => build(args),
        Command::Eval(args) => eval(args),
        Command::Report(args) => robustness_report(args),
        Command::Profile(args) => profile(args),
        Command::Sweep(args) => sweep(args),
        Command::TrainToy(args) => train_toy(args),
        Command::EvalToy(args) => eval_toy(args),
        Command::Verify(args) => verify(args),
    }
}

fn build(args: BuildArgs) -> trbench_cli::Result<ExitCode> {
    let dataset = annotations::load_annotations(&args.dataset)?;
    let grid = match args.grid {
        GridKind::Core => manifest::core_grid(),
        GridKind::Extended => manifest::extended_grid(),
    };
    let built = manifest::build_benchmark(&dataset, &args.frames, &grid, args.seed, &args.out)?;
    println!(
        "built {} outputs ({} videos x {} cells), {} errors; manifest at {}",
        built.entries.len(),
        dataset.videos.len(),
        grid.len(),
        built.errors.len(),
        args.out.join("manifest.json").display()
    );
    for e in &built.errors {
        eprintln!("bench: skipped {}: {}", e.video_id, e.error);
    }
    Ok(ExitCode::SUCCESS)
}

fn eval(args: EvalArgs) -> trbench_cli::Result<ExitCode> {
    let dataset = annotations::load_annotations(&args.dataset)?;
    let preds = annotations::load_predictions(&args.preds)?;
    let protocol = args.protocol.protocol();
    let result = mean_ap(&preds, &dataset, &protocol);
    if result.skipped_unknown_videos > 0 {
        eprintln!(
            "bench: warning: {} predictions reference unknown video ids",
            result.skipped_unknown_videos
        );
    }
    report::write_map_outputs(&result, args.protocol.name(), &args.out)?;
    for (t, m) in &result.per_threshold {
        println!("mAP@{t:.2} = {m:.2}");
    }
    println!("aggregate = {:.2}", result.aggregate);
    Ok(ExitCode::SUCCESS)
}

fn parse_cell_flag(flag: &str) -> trbench_cli::Result<(MetricsCell, PathBuf)> {
    let parts: Vec<&str> = flag.splitn(3, ':').collect();
    if parts.len() != 3 {
        return Err(Error::Invalid(format!(
            "--cell expects TYPE:LEVEL:PATH, got {flag:?}"
        )));
    }
    let ctype = CorruptionType::parse(parts[0])
        .ok_or_else(|| Error::Invalid(format!("unknown corruption type {:?}", parts[0])))?;
    let level: u8 = parts[1]
        .parse()
        .ok()
        .filter(|l| (1..=3).contains(l))
        .ok_or_else(|| Error::Invalid(format!("severity level must be 1..3, got {:?}", parts[1])))?;
    Ok(((ctype, level), PathBuf::from(parts[2])))
}

fn robustness_report(args: ReportArgs) -> trbench_cli::Result<ExitCode> {
    if args.cells.is_empty() {
        return Err(Error::Invalid("report needs at least one --cell".into()));
    }
    let dataset = annotations::load_annotations(&args.dataset)?;
    let protocol = args.protocol.protocol();
    let clean = mean_ap(&annotations::load_predictions(&args.clean)?, &dataset, &protocol);

    let mut cell_map: BTreeMap<MetricsCell, f64> = BTreeMap::new();
    for flag in &args.cells {
        let (cell, path) = parse_cell_flag(flag)?;
        let preds = annotations::load_predictions(&path)?;
        cell_map.insert(cell, mean_ap(&preds, &dataset, &protocol).aggregate);
    }
    let expected: Vec<(CorruptionType, SeverityLevel)> = match args.expect_grid {
        Some(GridKind::Core) => manifest::core_grid(),
        Some(GridKind::Extended) => manifest::extended_grid(),
        None => cell_map
            .keys()
            .map(|&(c, l)| (c, SeverityLevel::new(l).expect("validated on parse")))
            .collect(),
    };
    let result = robustness_report_from_maps(clean.aggregate, cell_map, &expected)?;
    report::write_robustness_outputs(&result, &args.out)?;
    println!(
        "clean mAP {:.2} | mean corrupted mAP {:.2} | relative robustness {:.2}",
        result.clean_map, result.mean_corrupted_map, result.gamma_overall
    );
    if !result.missing_cells.is_empty() {
        eprintln!("bench: warning: {} grid cells missing", result.missing_cells.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn profile(args: ProfileArgs) -> trbench_cli::Result<ExitCode> {
    if !(args.background_tiou < args.thr) {
        return Err(Error::Invalid(
            "--background-tiou must be below --thr".into(),
        ));
    }
    let dataset = annotations::load_annotations(&args.dataset)?;
    let preds = annotations::load_predictions(&args.preds)?;
    let tags = classify_false_positives(&preds, &dataset, args.thr, args.background_tiou);
    let (tp, counts) = tag_counts(&tags);
    let protocol = EvalProtocol::single(args.thr);

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut csv = String::from("category,count,map_impact_pp\n");
    csv.push_str(&format!("true_positive,{tp},\n"));
    let mut bars = Vec::new();
    for category in FpCategory::ALL {
        let impact = error_impact(&preds, &tags, &dataset, &protocol, category);
        csv.push_str(&format!("{},{},{:.4}\n", category.name(), counts[&category], impact));
        bars.push((category.name().to_string(), impact));
        println!(
            "{:<16} count {:>5} | removing it gains {:+.2} mAP",
            category.name(),
            counts[&category],
            impact
        );
    }
    let csv_path = args.out.join("categories.csv");
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    let chart = svg::bar_chart("mAP gained by removing each false-positive category", &bars);
    let svg_path = args.out.join("impact.svg");
    fs::write(&svg_path, chart).map_err(|e| Error::io(&svg_path, e))?;
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> trbench_cli::Result<ExitCode> {
    let curve = match (&args.dataset, &args.model) {
        (Some(dataset_path), None) => {
            sweep_files(dataset_path, args.frames.as_deref().unwrap(), args.preds.as_deref().unwrap(), &args.out)?
        }
        (None, Some(model_path)) => {
            let config = toy::ToyConfigFile::load(args.config.as_deref())?;
            let model_cfg = config.model_config(0);
            let model =
                model_io::load_model(model_path, model_cfg.nms_tiou, model_cfg.score_threshold)?;
            let synth =
                trbench_core::train::synth::generate_synthetic_dataset(&config.synth_config(), args.seed);
            toy::sweep_curve(&model, &synth, &toy::sweep_fractions())?
        }
        _ => {
            return Err(Error::Invalid(
                "sweep needs either --dataset/--frames/--preds or --model [--config]".into(),
            ))
        }
    };
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let csv_path = args.out.join("sweep.csv");
    fs::write(&csv_path, toy::sweep_csv(&curve)).map_err(|e| Error::io(&csv_path, e))?;
    let chart = svg::line_chart(
        "mAP vs corruption position within actions",
        &curve.points,
        "fraction of action instance",
        Some((curve.clean_map, "clean")),
    );
    let svg_path = args.out.join("sweep.svg");
    fs::write(&svg_path, chart).map_err(|e| Error::io(&svg_path, e))?;
    if curve.excluded_videos > 0 {
        eprintln!(
            "bench: warning: {} videos excluded (action shorter than the sweep window)",
            curve.excluded_videos
        );
    }
    for (fraction, map) in &curve.points {
        println!("fraction {fraction:.1}: mAP {map:.2}");
    }
    println!("clean reference: {:.2}", curve.clean_map);
    Ok(ExitCode::SUCCESS)
}

/// File-based sweep: writes black-frame corrupted copies per fraction and
/// evaluates the given static predictions against each.
fn sweep_files(
    dataset_path: &Path,
    frames_root: &Path,
    preds_path: &Path,
    out: &Path,
) -> trbench_cli::Result<toy::SweepCurve> {
    let dataset = annotations::load_annotations(dataset_path)?;
    let preds = annotations::load_predictions(preds_path)?;
    let protocol = EvalProtocol::single(toy::TOY_THRESHOLD);

    let eligible: Vec<_> = dataset
        .videos
        .iter()
        .filter(|v| {
            v.annotations.iter().all(|a| {
                let (s, e) = frame_span(a, v.fps, v.frame_count);
                e - s + 1 >= 5
            })
        })
        .cloned()
        .collect();
    let excluded_videos = dataset.videos.len() - eligible.len();
    if eligible.is_empty() {
        return Err(Error::Invalid(
            "position sweep: every video has an action shorter than 5 frames".into(),
        ));
    }
    let subset = Dataset::new(dataset.name.clone(), dataset.label_set.clone(), eligible)?;

    let clean_map = mean_ap(&preds, &subset, &protocol).aggregate;
    let mut points = Vec::new();
    for fraction in toy::sweep_fractions() {
        let dir = out.join(format!("frames_f{fraction:.1}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for video in &subset.videos {
            let src = frames_root.join(fseq::container_name(&video.id));
            let seq = fseq::read_file(&src)?;
            let mut spec = CorruptionSpec::new(
                CorruptionType::BlackFrame,
                SeverityLevel::new(1).expect("level 1 is valid"),
                0,
            );
            spec.placement = PlacementPolicy::FixedFraction(fraction);
            let (corrupted, _) = trbench_core::corrupt::corrupt_video(video, &seq, &spec)?;
            fseq::write_file(&corrupted, &dir.join(fseq::container_name(&video.id)))?;
        }
        // static predictions do not depend on the frames, so the curve is
        // flat at the clean mAP; the corrupted copies are the artifact
        points.push((fraction, mean_ap(&preds, &subset, &protocol).aggregate));
    }
    Ok(toy::SweepCurve { clean_map, points, excluded_videos })
}

fn train_toy(args: TrainToyArgs) -> trbench_cli::Result<ExitCode> {
    let config = toy::ToyConfigFile::load(args.config.as_deref())?;
    let framedrop = if args.framedrop {
        FrameDrop::On(match args.framedrop_scope {
            ScopeKind::Abpair => DropScope::AbPair,
            ScopeKind::ActionOnly => DropScope::ActionOnly,
        })
    } else {
        FrameDrop::Off
    };
    let trc = args.trc.as_deref().map(toy::parse_trc_flag).transpose()?;
    let (model, log, synth) = toy::train(&config, args.seed, framedrop, trc)?;
    model_io::save_model(&model, &args.out)?;
    let log_path = args.log.unwrap_or_else(|| default_log_path(&args.out));
    model_io::write_training_log(&log, &log_path)?;
    if synth.packing_fallbacks > 0 {
        eprintln!(
            "bench: warning: {} videos used fallback action placement",
            synth.packing_fallbacks
        );
    }
    println!(
        "trained {} epochs on {} videos (seed {}); model at {}, log at {}",
        log.epochs.len(),
        synth.train_indices.len(),
        args.seed,
        args.out.display(),
        log_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn default_log_path(model_path: &Path) -> PathBuf {
    let stem = model_path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match stem {
        Some(stem) => model_path.with_file_name(format!("{stem}_log.csv")),
        None => model_path.with_extension("log.csv"),
    }
}

fn eval_toy(args: EvalToyArgs) -> trbench_cli::Result<ExitCode> {
    let config = toy::ToyConfigFile::load(args.config.as_deref())?;
    let model_cfg = config.model_config(0);
    let model = model_io::load_model(&args.model, model_cfg.nms_tiou, model_cfg.score_threshold)?;
    let synth =
        trbench_core::train::synth::generate_synthetic_dataset(&config.synth_config(), args.seed);
    let eval = toy::evaluate_black(&model, &synth)?;
    println!("clean mAP@0.5      = {:.2}", eval.clean_map);
    for (i, map) in eval.per_level_map.iter().enumerate() {
        println!("black level {} mAP  = {map:.2}", i + 1);
    }
    println!("corrupted mean     = {:.2}", eval.corrupted_map);
    println!("relative robustness = {:.2}", eval.gamma);
    if let Some(out) = args.out {
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let path = out.join("eval_toy.json");
        let text = serde_json::to_string_pretty(&eval)
            .map_err(|e| Error::Json { path: path.clone(), source: e })?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> trbench_cli::Result<ExitCode> {
    let m = manifest::load_manifest(&args.manifest)?;
    let root = args
        .root
        .or_else(|| args.manifest.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = manifest::verify_manifest(&m, &root);
    println!("{} entries match", result.matches);
    for (path, status) in &result.mismatches {
        println!("MISMATCH {path}: {status:?}");
    }
    if result.all_match() {
        println!("verification OK");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("bench: {} entries failed verification", result.mismatches.len());
        Ok(ExitCode::from(2))
    }
}
