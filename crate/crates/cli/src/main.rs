//! `sebbs` command line: score conversion, evaluation, hyperparameter
//! tuning, cross-validation and synthetic corpus generation.
//!
//! Every subcommand is a pure function of its inputs and flags: no clock,
//! no network, no hidden state. Exit code 0 means success, 1 a data
//! error (malformed or inconsistent inputs), 2 a configuration error
//! (bad flags, missing paths, missing parameters).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sebbs::dataio;
use sebbs::metrics::{self, OperatingPoint};
use sebbs::model::{ClipEvents, ClipTracks, HyperParams};
use sebbs::synth::{self, SynthSpec};
use sebbs::tuning::{self, CorpusDetections, CvReport, Grid, Method, Metric};
use sebbs::{Error, EvalConfig, Gamma, GammaMode, GroundTruth, Result, StdMode};

#[derive(Parser)]
#[command(
    name = "sebbs",
    version,
    about = "Sound event bounding boxes: conversion, evaluation and tuning",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for per-clip parallelism (0 = all cores).
    #[arg(long, global = true, env = "SEBBS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert frame scores into SEBBs or final event lists.
    Convert(ConvertArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Grid-search per-class hyperparameters on a validation corpus.
    Tune(TuneArgs),
    /// k-fold cross-validation: tune on train folds, score held-out folds.
    Cv(CvArgs),
    /// Generate a seeded synthetic corpus of scores and ground truth.
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // A second in-process initialization cannot happen from the CLI;
        // ignore the error so tests driving main() twice stay harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Convert(args) => run_convert(args),
        Command::Eval(args) => run_eval(args),
        Command::Tune(args) => run_tune(args),
        Command::Cv(args) => run_cv(args),
        Command::Synth(args) => run_synth(args),
    }
}

// ---------------------------------------------------------------- shared

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Accepts the short metric spelling `cbf1` for collar-based F1.
fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    if s == "cbf1" {
        return Ok(Metric::CollarF1);
    }
    s.parse().map_err(|e: Error| e.to_string())
}

fn require_path(what: &str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

/// Evaluation constants shared by every scoring subcommand.
#[derive(Args)]
struct EvalFlags {
    /// Required fraction of a detection covered by same-class truth.
    #[arg(long, default_value_t = 0.7)]
    rho_dtc: f64,

    /// Required fraction of a truth event covered by valid detections.
    #[arg(long, default_value_t = 0.7)]
    rho_gtc: f64,

    /// Weight of the across-class standard deviation penalty.
    #[arg(long, default_value_t = 1.0)]
    alpha_st: f64,

    /// Upper PSD-ROC integration limit in false positives per hour.
    #[arg(long, default_value_t = 100.0)]
    e_max: f64,

    /// Allowed onset deviation in seconds for collar matching.
    #[arg(long, default_value_t = 0.2)]
    onset_collar: f64,

    /// Minimum allowed offset deviation in seconds.
    #[arg(long, default_value_t = 0.2)]
    offset_collar_floor: f64,

    /// Offset deviation as a fraction of the truth event length.
    #[arg(long, default_value_t = 0.2)]
    offset_collar_frac: f64,

    /// Standard deviation convention: population or sample.
    #[arg(long, default_value = "population")]
    std_mode: String,
}

impl EvalFlags {
    fn to_config(&self) -> Result<EvalConfig> {
        let std_mode = match self.std_mode.as_str() {
            "population" => StdMode::Population,
            "sample" => StdMode::Sample,
            other => {
                return Err(Error::Config(format!(
                    "unknown std mode '{other}' (expected population or sample)"
                )))
            }
        };
        let cfg = EvalConfig {
            rho_dtc: self.rho_dtc,
            rho_gtc: self.rho_gtc,
            alpha_st: self.alpha_st,
            e_max: self.e_max,
            onset_collar: self.onset_collar,
            offset_collar_floor: self.offset_collar_floor,
            offset_collar_frac: self.offset_collar_frac,
            std_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Validation corpus paths shared by tune and cv.
#[derive(Args)]
struct CorpusArgs {
    /// Directory of per-clip frame-score TSVs.
    #[arg(long)]
    scores: PathBuf,

    /// Ground-truth event TSV.
    #[arg(long)]
    gt: PathBuf,

    /// Clip duration TSV.
    #[arg(long)]
    durations: PathBuf,
}

impl CorpusArgs {
    fn load(&self) -> Result<(ClipTracks, GroundTruth)> {
        require_path("scores directory", &self.scores)?;
        require_path("ground-truth file", &self.gt)?;
        require_path("durations file", &self.durations)?;
        let tracks = dataio::read_scores(&self.scores)?;
        let gt = load_ground_truth(&self.gt, &self.durations)?;
        Ok((tracks, gt))
    }
}

fn load_ground_truth(gt: &Path, durations: &Path) -> Result<GroundTruth> {
    let (gt, warnings) = dataio::read_ground_truth(gt, durations)?;
    if warnings.clipped + warnings.dropped > 0 {
        eprintln!(
            "warning: {} ground-truth events clipped to clip bounds, {} dropped",
            warnings.clipped, warnings.dropped
        );
    }
    Ok(gt)
}

/// Grid overrides shared by tune and cv; unset lists keep the defaults.
#[derive(Args)]
struct GridFlags {
    /// Median filter lengths in seconds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    medfilt_lengths: Option<Vec<f64>>,

    /// Extent thresholds for tSEBBs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    ext_lambdas: Option<Vec<f64>>,

    /// Change-detection filter lengths in seconds, comma-separated.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,

    /// Absolute gap-merge thresholds; together with --gammas-rel this
    /// replaces the default gamma grid.
    #[arg(long, value_delimiter = ',')]
    gammas_abs: Option<Vec<f64>>,

    /// Relative gap-merge thresholds (factors > 1).
    #[arg(long, value_delimiter = ',')]
    gammas_rel: Option<Vec<f64>>,
}

impl GridFlags {
    fn to_grid(&self, metric: Metric) -> Grid {
        let mut grid = Grid {
            metric,
            ..Grid::default()
        };
        if let Some(v) = &self.medfilt_lengths {
            grid.medfilt_lengths = v.clone();
        }
        if let Some(v) = &self.ext_lambdas {
            grid.ext_lambdas = v.clone();
        }
        if let Some(v) = &self.taus {
            grid.taus = v.clone();
        }
        if self.gammas_abs.is_some() || self.gammas_rel.is_some() {
            let mut gammas = Vec::new();
            gammas.extend(self.gammas_abs.iter().flatten().map(|&v| Gamma::absolute(v)));
            gammas.extend(self.gammas_rel.iter().flatten().map(|&v| Gamma::relative(v)));
            grid.gammas = gammas;
        }
        grid
    }
}

/// Left-aligned fixed-width table on stdout.
fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let fmt_line = |cells: &[&str]| {
        let joined = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        println!("{}", joined.trim_end());
    };
    fmt_line(header);
    for row in rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        fmt_line(&cells);
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

fn fmt_gamma(g: Option<Gamma>) -> String {
    g.map(|g| match g.mode {
        GammaMode::Absolute => format!("{:.4} abs", g.value),
        GammaMode::Relative => format!("{:.4} rel", g.value),
    })
    .unwrap_or_else(|| "-".into())
}

fn print_params(params: &HyperParams) {
    let rows: Vec<Vec<String>> = params
        .classes
        .iter()
        .map(|(class, p)| {
            vec![
                class.clone(),
                fmt_opt(p.medfilt_len),
                fmt_opt(p.lambda_ext),
                fmt_opt(p.tau),
                fmt_gamma(p.gamma),
                fmt_opt(p.lambda_hyb),
                fmt_opt(p.lambda_nopsds),
                fmt_opt(p.lambda_f),
            ]
        })
        .collect();
    print_table(
        &[
            "class",
            "medfilt_len",
            "lambda_ext",
            "tau",
            "gamma",
            "lambda_hyb",
            "lambda_nopsds",
            "lambda_f",
        ],
        &rows,
    );
}

// --------------------------------------------------------------- convert

#[derive(Args)]
struct ConvertArgs {
    /// Directory of per-clip frame-score TSVs.
    #[arg(long)]
    scores: PathBuf,

    /// Hyperparameter JSON fixing the per-class conversion settings.
    #[arg(long)]
    params: PathBuf,

    /// Conversion method: legacy, medfilt, tsebb, csebb or hsebb.
    #[arg(long, value_parser = parse_method)]
    method: Method,

    /// Output TSV: SEBBs for tsebb/csebb/hsebb, final events otherwise.
    #[arg(long)]
    output: PathBuf,
}

fn run_convert(args: ConvertArgs) -> Result<()> {
    require_path("scores directory", &args.scores)?;
    require_path("params file", &args.params)?;
    let tracks = dataio::read_scores(&args.scores)?;
    let params = dataio::read_params(&args.params)?;
    let detections = tuning::convert_corpus(&tracks, args.method, &params)?;
    match &detections {
        CorpusDetections::Sebbs(sebbs) => {
            dataio::write_sebbs(sebbs, &args.output)?;
            let total: usize = sebbs.values().map(Vec::len).sum();
            println!(
                "wrote {} SEBBs across {} clips to {}",
                total,
                sebbs.len(),
                args.output.display()
            );
        }
        CorpusDetections::Tracks(_) => {
            // Frame-score methods have no confidence-bearing boxes; the
            // output is the final event list at each class's lambda_f.
            let events = tuning::final_events(&detections, &params)?;
            dataio::write_events(&events, &args.output)?;
            let total: usize = events.values().map(Vec::len).sum();
            println!(
                "wrote {} events across {} clips to {}",
                total,
                events.len(),
                args.output.display()
            );
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ eval

#[derive(Args)]
struct EvalArgs {
    /// Frame-score directory as the detection source (needs --method).
    #[arg(long)]
    scores: Option<PathBuf>,

    /// SEBB TSV as the detection source.
    #[arg(long)]
    sebbs: Option<PathBuf>,

    /// Final-event TSV as the detection source (collar F1 only).
    #[arg(long)]
    events: Option<PathBuf>,

    /// Conversion method applied to --scores before evaluation.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,

    /// Hyperparameter JSON (required when the metric needs thresholds).
    #[arg(long)]
    params: Option<PathBuf>,

    /// Ground-truth event TSV.
    #[arg(long)]
    gt: PathBuf,

    /// Clip duration TSV.
    #[arg(long)]
    durations: PathBuf,

    /// Metric: psds1, nopsds1 or cbf1.
    #[arg(long, value_parser = parse_metric)]
    metric: Metric,

    /// Directory receiving report.json and, for PSDS-type metrics, the
    /// operating-point and ROC tables.
    #[arg(long)]
    output_dir: PathBuf,

    #[command(flatten)]
    eval: EvalFlags,
}

enum EvalInput {
    Corpus(CorpusDetections),
    Events(ClipEvents),
}

#[derive(Serialize)]
struct EvalReport {
    schema_version: u32,
    metric: Metric,
    /// Headline value: normalized ROC area or macro F1.
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    micro_f1: Option<f64>,
    classes: BTreeMap<String, ClassReport>,
}

#[derive(Default, Serialize)]
struct ClassReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_nopsds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tp: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fp: Option<usize>,
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    fn_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f1: Option<f64>,
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let cfg = args.eval.to_config()?;
    let n_sources = [
        args.scores.is_some(),
        args.sebbs.is_some(),
        args.events.is_some(),
    ]
    .iter()
    .filter(|&&s| s)
    .count();
    if n_sources != 1 {
        return Err(Error::Config(
            "exactly one of --scores, --sebbs or --events must be given".into(),
        ));
    }
    if args.scores.is_some() && args.method.is_none() {
        return Err(Error::Config("--scores requires --method".into()));
    }
    if args.method.is_some() && args.scores.is_none() {
        return Err(Error::Config(
            "--method only applies to --scores input".into(),
        ));
    }
    require_path("ground-truth file", &args.gt)?;
    require_path("durations file", &args.durations)?;
    if let Some(p) = &args.params {
        require_path("params file", p)?;
    }

    let gt = load_ground_truth(&args.gt, &args.durations)?;
    let params = match &args.params {
        Some(p) => dataio::read_params(p)?,
        None => HyperParams::new(),
    };
    let input = if let Some(dir) = &args.scores {
        require_path("scores directory", dir)?;
        let tracks = dataio::read_scores(dir)?;
        let method = args.method.expect("checked above");
        EvalInput::Corpus(tuning::convert_corpus(&tracks, method, &params)?)
    } else if let Some(path) = &args.sebbs {
        require_path("SEBB file", path)?;
        EvalInput::Corpus(CorpusDetections::Sebbs(dataio::read_sebbs(path)?))
    } else {
        let path = args.events.as_ref().expect("checked above");
        require_path("event file", path)?;
        EvalInput::Events(dataio::read_events(path)?)
    };

    std::fs::create_dir_all(&args.output_dir).map_err(|e| Error::Io {
        path: args.output_dir.display().to_string(),
        source: e,
    })?;
    let report = match args.metric {
        Metric::CollarF1 => eval_collar(&input, &gt, &params, &cfg)?,
        Metric::Psds1 | Metric::NoPsds1 => {
            eval_psds(&input, &gt, &params, &cfg, args.metric, &args.output_dir)?
        }
    };
    println!();
    println!("{} = {:.6}", args.metric, report.value);
    let report_path = args.output_dir.join("report.json");
    dataio::write_json(&report, &report_path)?;
    println!("report written to {}", report_path.display());
    Ok(())
}

fn eval_collar(
    input: &EvalInput,
    gt: &GroundTruth,
    params: &HyperParams,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let events = match input {
        EvalInput::Events(events) => events.clone(),
        EvalInput::Corpus(corpus) => tuning::final_events(corpus, params)?,
    };
    let f1 = metrics::collar_f1(&events, gt, cfg)?;
    let rows: Vec<Vec<String>> = f1
        .classes
        .iter()
        .map(|c| {
            vec![
                c.class_label.clone(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_count.to_string(),
                format!("{:.4}", c.f1()),
            ]
        })
        .collect();
    print_table(&["class", "tp", "fp", "fn", "f1"], &rows);
    let classes = f1
        .classes
        .iter()
        .map(|c| {
            (
                c.class_label.clone(),
                ClassReport {
                    tp: Some(c.tp),
                    fp: Some(c.fp),
                    fn_count: Some(c.fn_count),
                    f1: Some(c.f1()),
                    ..ClassReport::default()
                },
            )
        })
        .collect();
    Ok(EvalReport {
        schema_version: 1,
        metric: Metric::CollarF1,
        value: f1.macro_f1(),
        micro_f1: Some(f1.micro_f1()),
        classes,
    })
}

fn eval_psds(
    input: &EvalInput,
    gt: &GroundTruth,
    params: &HyperParams,
    cfg: &EvalConfig,
    metric: Metric,
    output_dir: &Path,
) -> Result<EvalReport> {
    let corpus = match input {
        EvalInput::Corpus(corpus) => corpus,
        EvalInput::Events(_) => {
            return Err(Error::Config(format!(
                "final events carry no confidences; {metric} needs --scores or --sebbs"
            )))
        }
    };
    let candidates = tuning::corpus_candidates(corpus);
    let points = metrics::operating_points(&corpus.as_input(), gt, cfg, &candidates)?;
    let (curve, floors) = match metric {
        Metric::Psds1 => (metrics::psd_roc_envelope(&points, cfg.e_max), None),
        Metric::NoPsds1 => {
            let effective = with_nopsds_floors(&points, params);
            let curve = metrics::psd_roc_raw(&points, &effective, cfg.e_max)?;
            (curve, Some(effective))
        }
        Metric::CollarF1 => unreachable!("dispatched in run_eval"),
    };
    let value = metrics::psds(&curve, cfg);

    dataio::write_operating_points(&points, output_dir.join("operating_points.tsv"))?;
    dataio::write_psd_roc(&curve, output_dir.join("psd_roc.tsv"))?;
    dataio::write_mu_curve(&curve, cfg, output_dir.join("mu_curve.tsv"))?;

    let mut rows = Vec::new();
    let mut classes = BTreeMap::new();
    for roc in &curve.classes {
        let auc = roc.normalized_area(cfg.e_max);
        let floor = floors
            .as_ref()
            .and_then(|p| p.get(&roc.class_label))
            .and_then(|p| p.lambda_nopsds);
        let mut row = vec![roc.class_label.clone(), format!("{auc:.4}")];
        if metric == Metric::NoPsds1 {
            row.push(fmt_opt(floor));
        }
        rows.push(row);
        classes.insert(
            roc.class_label.clone(),
            ClassReport {
                auc: Some(auc),
                lambda_nopsds: floor,
                ..ClassReport::default()
            },
        );
    }
    if metric == Metric::NoPsds1 {
        print_table(&["class", "auc", "lambda_nopsds"], &rows);
    } else {
        print_table(&["class", "auc"], &rows);
    }
    Ok(EvalReport {
        schema_version: 1,
        metric,
        value,
        micro_f1: None,
        classes,
    })
}

/// Per-class noPSDS floors: stored values win, anything missing is fitted
/// from the operating points as the smallest threshold maximizing #TP.
fn with_nopsds_floors(points: &[OperatingPoint], params: &HyperParams) -> HyperParams {
    let mut effective = params.clone();
    let Some(first) = points.first() else {
        return effective;
    };
    for class in first.classes.keys() {
        let entry = effective.classes.entry(class.clone()).or_default();
        if entry.lambda_nopsds.is_some() {
            continue;
        }
        let tp_points: Vec<(f64, i64)> = points
            .iter()
            .filter_map(|p| {
                p.classes
                    .get(class)
                    .map(|r| (p.threshold, r.counts.tp as i64))
            })
            .collect();
        entry.lambda_nopsds = tuning::tune_nopsds_threshold(&tp_points).or(Some(0.0));
    }
    effective
}

// ------------------------------------------------------------------ tune

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Conversion method: legacy, medfilt, tsebb, csebb or hsebb.
    #[arg(long, value_parser = parse_method)]
    method: Method,

    /// Tuning objective: psds1, nopsds1 or cbf1.
    #[arg(long, value_parser = parse_metric)]
    metric: Metric,

    /// Output path of the tuned hyperparameter JSON.
    #[arg(long)]
    output: PathBuf,

    #[command(flatten)]
    grid: GridFlags,

    #[command(flatten)]
    eval: EvalFlags,
}

fn run_tune(args: TuneArgs) -> Result<()> {
    let cfg = args.eval.to_config()?;
    let (tracks, gt) = args.corpus.load()?;
    let grid = args.grid.to_grid(args.metric);
    let params = tuning::grid_search(&tracks, &gt, &grid, args.method, &cfg)?;
    print_params(&params);
    dataio::write_params(&params, &args.output)?;
    println!();
    println!("params written to {}", args.output.display());
    Ok(())
}

// -------------------------------------------------------------------- cv

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Conversion method: legacy, medfilt, tsebb, csebb or hsebb.
    #[arg(long, value_parser = parse_method)]
    method: Method,

    /// Metric: psds1, nopsds1 or cbf1.
    #[arg(long, value_parser = parse_metric)]
    metric: Metric,

    /// Number of folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,

    /// Fold-assignment shuffle seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output path of the JSON report (per-fold params and metrics).
    #[arg(long)]
    output: PathBuf,

    #[command(flatten)]
    grid: GridFlags,

    #[command(flatten)]
    eval: EvalFlags,
}

#[derive(Serialize)]
struct VersionedCvReport {
    schema_version: u32,
    #[serde(flatten)]
    report: CvReport,
}

fn run_cv(args: CvArgs) -> Result<()> {
    let cfg = args.eval.to_config()?;
    let (tracks, gt) = args.corpus.load()?;
    let grid = args.grid.to_grid(args.metric);
    let report = tuning::cross_validate(
        &tracks,
        &gt,
        &grid,
        args.method,
        args.folds,
        args.seed,
        &cfg,
    )?;
    let rows: Vec<Vec<String>> = report
        .folds
        .iter()
        .map(|f| {
            vec![
                f.fold.to_string(),
                f.test_clips.len().to_string(),
                format!("{:.6}", f.metric_value),
            ]
        })
        .collect();
    print_table(&["fold", "test_clips", &format!("{}", args.metric)], &rows);
    println!();
    println!("pooled {} = {:.6}", args.metric, report.pooled);
    let versioned = VersionedCvReport {
        schema_version: 1,
        report,
    };
    dataio::write_json(&versioned, &args.output)?;
    println!("report written to {}", args.output.display());
    Ok(())
}

// ----------------------------------------------------------------- synth

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving scores/, ground_truth.tsv and durations.tsv.
    #[arg(long)]
    output_dir: PathBuf,

    /// Number of clips.
    #[arg(long, default_value_t = 20)]
    clips: usize,

    /// Clip duration in seconds; must be a whole number of frames.
    #[arg(long, default_value_t = 10.0)]
    duration: f64,

    /// Frame width in seconds.
    #[arg(long, default_value_t = 0.1)]
    frame_width: f64,

    /// Class labels, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "a,b,c")]
    classes: Vec<String>,

    /// Expected events per clip and class.
    #[arg(long, default_value_t = 0.8)]
    event_rate: f64,

    /// Peak heights drawn uniformly from this set, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.5")]
    peak_heights: Vec<f64>,

    /// Total width of each linear ramp, centered on the event edge.
    #[arg(long, default_value_t = 0.4)]
    ramp_width: f64,

    /// Uniform noise amplitude added per frame before clamping.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,

    /// Shortest event length in seconds.
    #[arg(long, default_value_t = 0.8)]
    len_min: f64,

    /// Longest event length in seconds.
    #[arg(long, default_value_t = 1.6)]
    len_max: f64,

    /// Minimum silence between same-class events of one clip.
    #[arg(long, default_value_t = 1.0)]
    min_gap: f64,

    /// Corpus seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n_clips: args.clips,
        clip_duration: args.duration,
        frame_width: args.frame_width,
        classes: args.classes.clone(),
        event_rate: args.event_rate,
        peak_heights: args.peak_heights.clone(),
        ramp_width: args.ramp_width,
        noise_amplitude: args.noise,
        event_len_range: (args.len_min, args.len_max),
        min_gap: args.min_gap,
        seed: args.seed,
    };
    let (tracks, gt) = synth::generate(&spec)?;
    let scores_dir = args.output_dir.join("scores");
    dataio::write_scores(&tracks, &scores_dir)?;
    dataio::write_ground_truth(
        &gt,
        args.output_dir.join("ground_truth.tsv"),
        args.output_dir.join("durations.tsv"),
    )?;
    let n_events: usize = gt.clips.values().map(|c| c.events.len()).sum();
    println!(
        "wrote {} clips with {} ground-truth events to {}",
        tracks.len(),
        n_events,
        args.output_dir.display()
    );
    Ok(())
}
