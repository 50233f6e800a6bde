//! Single-binary command line: generate, homogenize, predict, eval, delta,
//! complexity, report.
//!
//! Exit codes: 0 success, 1 validation/config error, 2 I/O error,
//! 3 numeric error. Progress and summaries go to stderr; data goes only to
//! the declared output paths. `--jobs N` controls scenario-level
//! parallelism; output order and numeric results do not depend on N.

mod config;
mod files;

pub use config::RunConfig;

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::complexity::{
    complexity_distribution, hdr_levels, kde_2d, ComplexityError, DEFAULT_GRID_RESOLUTION,
    DEFAULT_HORIZON, DEFAULT_LOW_SPEED_THRESHOLD,
};
use crate::homogenize::{
    cap_complexity, homogenize_scenario_as, HomogenizeError, HomogenizedSample, RejectionReason,
};
use crate::ingest::{
    generate_scenario, parse_predictions, parse_scenarios, write_predictions, write_scenarios,
    IngestError, ManeuverKind, SyntheticConfig,
};
use crate::metrics::{
    aggregate, delta_metrics, evaluate_sample, MetricKind, MetricsError, RunMeta,
};
use crate::predictors::{
    predict_constant_velocity, predict_polynomial, PredictError, PredictionSet,
};
use crate::report::{render_delta_summary, render_table, ReportError, RunRegistry};
use crate::scenario::SourceProfile;

use config::{require, resolve, resolve_opt};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => CliError::Io(e.to_string()),
            IngestError::Config(_) => CliError::Config(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<HomogenizeError> for CliError {
    fn from(e: HomogenizeError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::UnknownAgent { .. } => CliError::Validation(e.to_string()),
            PredictError::Fit { .. } | PredictError::Prediction(_) => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ComplexityError> for CliError {
    fn from(e: ComplexityError) -> Self {
        match e {
            ComplexityError::DegenerateData(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "trajeval",
    version = concat!(env!("CARGO_PKG_VERSION"), " (scenario schema v1)"),
    about = "Cross-dataset trajectory-prediction evaluation toolkit"
)]
struct Cli {
    /// Scenario-level worker count; results are independent of N.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Flat `key = value` configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a deterministic synthetic scenario corpus.
    Generate(GenerateArgs),
    /// Re-slice scenarios into the common 91-step schema.
    Homogenize(HomogenizeArgs),
    /// Produce baseline predictions for every focal agent.
    Predict(PredictArgs),
    /// Score predictions against ground-truth futures.
    Eval(EvalArgs),
    /// ID-vs-OoD differences between two metrics files.
    Delta(DeltaArgs),
    /// Prediction-complexity distribution, KDE grid and HDR levels.
    Complexity(ComplexityArgs),
    /// Render benchmark tables and delta summaries.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Output scenario file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step_count: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    speed_min: Option<f64>,
    #[arg(long)]
    speed_max: Option<f64>,
    #[arg(long)]
    agents_min: Option<usize>,
    #[arg(long)]
    agents_max: Option<usize>,
    #[arg(long)]
    map_elements: Option<usize>,
    #[arg(long)]
    window_start: Option<usize>,
    #[arg(long)]
    window_end: Option<usize>,
    /// Maneuver mix as `kind=weight,...`, overriding any config weights.
    #[arg(long)]
    maneuvers: Option<String>,
}

#[derive(Args, Debug)]
struct HomogenizeArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// a2 | wo | auto (use each scenario's own profile).
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    cap_agents: Option<usize>,
    #[arg(long)]
    cap_map: Option<usize>,
    /// Rejection list (scenario_id, reason).
    #[arg(long)]
    rejects: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Homogenized scenario file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output prediction file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// cv | poly.
    #[arg(long)]
    model: Option<String>,
    /// Polynomial ensemble degrees, e.g. 1,2,3,4,5,6.
    #[arg(long)]
    degrees: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    scenarios: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Comma-separated K values (subset of 1,6).
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    model_tag: Option<String>,
    #[arg(long)]
    train_tag: Option<String>,
    #[arg(long)]
    test_tag: Option<String>,
}

#[derive(Args, Debug)]
struct DeltaArgs {
    /// Metrics file from the in-distribution run.
    #[arg(long)]
    id: Option<PathBuf>,
    /// Metrics file from the out-of-distribution run.
    #[arg(long)]
    ood: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ComplexityArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    t_start: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a KDE grid of (d_lon, d_lat) to this path; an HDR-level
    /// sidecar lands next to it.
    #[arg(long)]
    kde: Option<PathBuf>,
    /// HDR masses, strictly increasing in (0,1).
    #[arg(long)]
    masses: Option<String>,
    #[arg(long)]
    grid_resolution: Option<usize>,
    #[arg(long)]
    low_speed_threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(subcommand)]
    command: ReportCommand,
}

#[derive(Subcommand, Debug)]
enum ReportCommand {
    /// Absolute errors with reference-relative percentages.
    Table(ReportTableArgs),
    /// Per-model ID value, OoD increase and relative increase.
    Delta(ReportDeltaArgs),
}

#[derive(Args, Debug)]
struct ReportTableArgs {
    /// Directory of per-run metrics CSV files.
    #[arg(long)]
    runs: Option<PathBuf>,
    /// Model tag whose results read as 100%.
    #[arg(long)]
    reference: Option<String>,
    /// Output stem; writes <stem>.txt and <stem>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportDeltaArgs {
    /// Directory of ID metrics CSV files.
    #[arg(long)]
    id: Option<PathBuf>,
    /// Directory of OoD metrics CSV files.
    #[arg(long)]
    ood: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse argv and run; returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("trajeval: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let jobs = resolve(cli.jobs, &config, "jobs", 1usize)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Generate(args) => run_generate(args, &config),
        Command::Homogenize(args) => run_homogenize(args, &config),
        Command::Predict(args) => run_predict(args, &config),
        Command::Eval(args) => run_eval(args, &config),
        Command::Delta(args) => run_delta(args, &config),
        Command::Complexity(args) => run_complexity(args, &config),
        Command::Report(args) => match args.command {
            ReportCommand::Table(t) => run_report_table(t, &config),
            ReportCommand::Delta(d) => run_report_delta(d, &config),
        },
    })
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!(
            "input file {} does not exist",
            path.display()
        )))
    }
}

fn parse_list<T>(raw: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Config(format!("invalid {what} entry `{s}`: {e}")))
        })
        .collect()
}

fn parse_profile(raw: &str) -> Result<Option<SourceProfile>, CliError> {
    match raw {
        "auto" => Ok(None),
        "a2" => Ok(Some(SourceProfile::A2)),
        "wo" => Ok(Some(SourceProfile::Wo)),
        "synthetic" => Ok(Some(SourceProfile::Synthetic)),
        other => Err(CliError::Config(format!(
            "unknown profile `{other}` (expected a2 | wo | synthetic | auto)"
        ))),
    }
}

fn parse_maneuver_mix(raw: &str) -> Result<BTreeMap<ManeuverKind, f64>, CliError> {
    let mut mix = BTreeMap::new();
    for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((kind, weight)) = part.split_once('=') else {
            return Err(CliError::Config(format!(
                "maneuver entry `{part}` must look like kind=weight"
            )));
        };
        let kind = kind
            .trim()
            .parse::<ManeuverKind>()
            .map_err(CliError::Config)?;
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("maneuver weight `{weight}`: {e}")))?;
        mix.insert(kind, weight);
    }
    Ok(mix)
}

fn run_generate(args: GenerateArgs, config: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let out = require(args.out, config, "out")?;
    let defaults = SyntheticConfig::default();
    let mix = match args.maneuvers.as_deref() {
        Some(raw) => parse_maneuver_mix(raw)?,
        None => {
            let from_file = config.maneuver_weights()?;
            if from_file.is_empty() {
                defaults.maneuver_mix.clone()
            } else {
                from_file
            }
        }
    };
    let cfg = SyntheticConfig {
        scenario_count: resolve(
            args.count,
            config,
            "scenario_count",
            defaults.scenario_count,
        )?,
        step_count: resolve(args.step_count, config, "step_count", defaults.step_count)?,
        maneuver_mix: mix,
        maneuver_window: (
            resolve(
                args.window_start,
                config,
                "maneuver_window_start",
                defaults.maneuver_window.0,
            )?,
            resolve(
                args.window_end,
                config,
                "maneuver_window_end",
                defaults.maneuver_window.1,
            )?,
        ),
        speed_range: (
            resolve(args.speed_min, config, "speed_min", defaults.speed_range.0)?,
            resolve(args.speed_max, config, "speed_max", defaults.speed_range.1)?,
        ),
        noise_sigma: resolve(
            args.noise_sigma,
            config,
            "noise_sigma",
            defaults.noise_sigma,
        )?,
        agent_count_range: (
            resolve(
                args.agents_min,
                config,
                "agent_count_min",
                defaults.agent_count_range.0,
            )?,
            resolve(
                args.agents_max,
                config,
                "agent_count_max",
                defaults.agent_count_range.1,
            )?,
        ),
        map_elements_per_scene: resolve(
            args.map_elements,
            config,
            "map_elements_per_scene",
            defaults.map_elements_per_scene,
        )?,
        seed: resolve(args.seed, config, "seed", defaults.seed)?,
    };
    cfg.validate()?;
    let scenarios: Vec<_> = (0..cfg.scenario_count)
        .into_par_iter()
        .map(|i| generate_scenario(&cfg, i))
        .collect();
    let count = write_scenarios(&scenarios, &out)?;
    eprintln!(
        "generate: {count} scenarios (seed {}) -> {} [{:.2?}]",
        cfg.seed,
        out.display(),
        start.elapsed()
    );
    Ok(())
}

fn run_homogenize(args: HomogenizeArgs, config: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let input: PathBuf = require(args.input, config, "in")?;
    let out: PathBuf = require(args.out, config, "out")?;
    let rejects_path: PathBuf = require(args.rejects, config, "rejects")?;
    let profile_raw: String = resolve(args.profile, config, "profile", "auto".into())?;
    let expected = parse_profile(&profile_raw)?;
    let cap_agents = resolve_opt(args.cap_agents, config, "cap_agents")?;
    let cap_map = resolve_opt(args.cap_map, config, "cap_map")?;
    check_input(&input)?;

    let scenarios = parse_scenarios(&input)?;
    let outcomes: Vec<Result<HomogenizedSample, RejectionReason>> = scenarios
        .par_iter()
        .map(|s| homogenize_scenario_as(s, expected))
        .collect();

    let mut samples = Vec::new();
    let mut rejects: Vec<(String, RejectionReason)> = Vec::new();
    for (scenario, outcome) in scenarios.iter().zip(outcomes) {
        match outcome {
            Ok(sample) => samples.push(sample),
            Err(reason) => rejects.push((scenario.scenario_id.clone(), reason)),
        }
    }

    if cap_agents.is_some() || cap_map.is_some() {
        let max_agents = cap_agents.unwrap_or(50);
        let max_map = cap_map.unwrap_or(80);
        samples = samples
            .par_iter()
            .map(|s| cap_complexity(s, max_agents, max_map))
            .collect::<Result<Vec<_>, _>>()?;
    }

    let output: Vec<_> = samples.iter().map(|s| s.scenario().clone()).collect();
    write_scenarios(&output, &out)?;
    files::write_rejects_csv(&rejects_path, &rejects)?;

    let mut by_reason: BTreeMap<String, usize> = BTreeMap::new();
    for (_, reason) in &rejects {
        *by_reason.entry(reason.to_string()).or_default() += 1;
    }
    eprintln!(
        "homogenize: {} in, {} accepted, {} rejected {:?} -> {} [{:.2?}]",
        scenarios.len(),
        samples.len(),
        rejects.len(),
        by_reason,
        out.display(),
        start.elapsed()
    );

    let structural: Vec<&(String, RejectionReason)> = rejects
        .iter()
        .filter(|(_, r)| {
            matches!(
                r,
                RejectionReason::TooShort | RejectionReason::InvalidSource
            )
        })
        .collect();
    if let Some((id, reason)) = structural.first() {
        return Err(CliError::Validation(format!(
            "{} scenario(s) rejected structurally (first: scenario {id}: {reason}); \
             wrong --profile or malformed input",
            structural.len()
        )));
    }
    Ok(())
}

fn load_samples(path: &Path) -> Result<Vec<HomogenizedSample>, CliError> {
    check_input(path)?;
    parse_scenarios(path)?
        .into_iter()
        .map(|s| HomogenizedSample::from_scenario(s).map_err(CliError::from))
        .collect()
}

fn run_predict(args: PredictArgs, config: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let input: PathBuf = require(args.input, config, "in")?;
    let out: PathBuf = require(args.out, config, "out")?;
    let model: String = resolve(args.model, config, "model", "cv".into())?;
    let degrees: Vec<usize> = {
        let raw: String = resolve(args.degrees, config, "degrees", "1,2,3,4,5,6".into())?;
        parse_list(&raw, "degree")?
    };

    let samples = load_samples(&input)?;
    let predictions: Vec<PredictionSet> = match model.as_str() {
        "cv" => samples
            .par_iter()
            .map(|s| predict_constant_velocity(s, s.focal_agent_id()))
            .collect::<Result<Vec<_>, _>>()?,
        "poly" => samples
            .par_iter()
            .map(|s| predict_polynomial(s, s.focal_agent_id(), &degrees))
            .collect::<Result<Vec<_>, _>>()?,
        other => {
            return Err(CliError::Config(format!(
                "unknown model `{other}` (expected cv | poly)"
            )))
        }
    };
    let count = write_predictions(&predictions, &out)?;
    eprintln!(
        "predict: {count} predictions (model {model}) -> {} [{:.2?}]",
        out.display(),
        start.elapsed()
    );
    Ok(())
}

fn run_eval(args: EvalArgs, config: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let scenarios_path: PathBuf = require(args.scenarios, config, "scenarios")?;
    let predictions_path: PathBuf = require(args.predictions, config, "predictions")?;
    let out: PathBuf = require(args.out, config, "out")?;
    let ks: Vec<usize> = {
        let raw: String = resolve(args.k, config, "k", "1,6".into())?;
        parse_list(&raw, "K")?
    };
    let meta = RunMeta {
        model_tag: resolve(args.model_tag, config, "model_tag", "model".into())?,
        train_tag: resolve(args.train_tag, config, "train_tag", "train".into())?,
        test_tag: resolve(args.test_tag, config, "test_tag", "test".into())?,
    };

    let samples = load_samples(&scenarios_path)?;
    check_input(&predictions_path)?;
    let predictions = parse_predictions(&predictions_path)?;

    let mut by_key: HashMap<(String, String), &PredictionSet> = HashMap::new();
    for p in &predictions {
        if by_key
            .insert((p.scenario_id.clone(), p.agent_id.clone()), p)
            .is_some()
        {
            return Err(CliError::Validation(format!(
                "duplicate prediction for scenario {} agent {}",
                p.scenario_id, p.agent_id
            )));
        }
    }
    let mut pairs = Vec::with_capacity(samples.len());
    for sample in &samples {
        let key = (
            sample.scenario().scenario_id.clone(),
            sample.focal_agent_id().to_string(),
        );
        match by_key.remove(&key) {
            Some(p) => pairs.push((sample, p)),
            None => {
                return Err(CliError::Validation(format!(
                    "no prediction for scenario {} focal agent {}",
                    key.0, key.1
                )))
            }
        }
    }
    if let Some(((scenario_id, agent_id), _)) = by_key.into_iter().next() {
        return Err(CliError::Validation(format!(
            "prediction for scenario {scenario_id} agent {agent_id} matches no focal agent in the scenario file"
        )));
    }

    let records = pairs
        .par_iter()
        .map(|(sample, pred)| evaluate_sample(sample, pred, &ks))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = aggregate(&records, meta.clone())?;
    files::write_metrics_csv(&out, &meta, &records)?;

    let mut summary = String::new();
    for kind in MetricKind::ALL {
        if let Some(mean) = dataset.mean(kind) {
            summary.push_str(&format!(" {}={mean:.3}", kind.label()));
        }
    }
    eprintln!(
        "eval: {} samples (model {}){summary} -> {} [{:.2?}]",
        records.len(),
        meta.model_tag,
        out.display(),
        start.elapsed()
    );
    Ok(())
}

fn run_delta(args: DeltaArgs, config: &RunConfig) -> Result<(), CliError> {
    let id_path: PathBuf = require(args.id, config, "id")?;
    let ood_path: PathBuf = require(args.ood, config, "ood")?;
    let out: PathBuf = require(args.out, config, "out")?;
    check_input(&id_path)?;
    check_input(&ood_path)?;
    let (id_meta, id_records) = files::read_metrics_csv(&id_path)?;
    let (ood_meta, ood_records) = files::read_metrics_csv(&ood_path)?;
    let id = aggregate(&id_records, id_meta)?;
    let ood = aggregate(&ood_records, ood_meta)?;
    let records = delta_metrics(&id, &ood)?;
    files::write_delta_csv(&out, &records)?;
    for r in &records {
        let rel = r
            .relative_pct
            .map(|v| format!("{v:.1}%"))
            .unwrap_or_else(|| "undefined".into());
        eprintln!(
            "delta: {} id={:.3} ood={:.3} delta={:+.3} ({rel})",
            r.metric.label(),
            r.id_value,
            r.ood_value,
            r.delta
        );
    }
    Ok(())
}

fn run_complexity(args: ComplexityArgs, config: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let input: PathBuf = require(args.input, config, "in")?;
    let out: PathBuf = require(args.out, config, "out")?;
    let t_start = resolve(args.t_start, config, "t_start", 5.0)?;
    let horizon = resolve(args.horizon, config, "horizon", DEFAULT_HORIZON)?;
    let threshold = resolve(
        args.low_speed_threshold,
        config,
        "low_speed_threshold",
        DEFAULT_LOW_SPEED_THRESHOLD,
    )?;
    let kde_path = resolve_opt(args.kde, config, "kde")?;
    let resolution = resolve(
        args.grid_resolution,
        config,
        "grid_resolution",
        DEFAULT_GRID_RESOLUTION,
    )?;
    let masses: Vec<f64> = {
        let raw: String = resolve(args.masses, config, "masses", "0.3,0.6,0.9".into())?;
        parse_list(&raw, "mass")?
    };
    check_input(&input)?;

    let scenarios = parse_scenarios(&input)?;
    let dist = complexity_distribution(&scenarios, t_start, horizon, threshold)?;
    files::write_dist_csv(&out, &dist)?;
    eprintln!(
        "complexity: {} vectors, {} excluded (low speed), {} excluded (out of range) -> {} [{:.2?}]",
        dist.entries.len(),
        dist.excluded_low_speed,
        dist.excluded_out_of_range,
        out.display(),
        start.elapsed()
    );

    if let Some(kde_path) = kde_path {
        let grid = kde_2d(&dist.points(), resolution)?;
        let levels = hdr_levels(&grid, &masses)?;
        files::write_grid_csv(&kde_path, &grid)?;
        let sidecar = files::levels_sidecar_path(&kde_path);
        files::write_levels_csv(&sidecar, &masses, &levels)?;
        eprintln!(
            "complexity: {}x{} KDE grid -> {} (levels -> {})",
            grid.nx,
            grid.ny,
            kde_path.display(),
            sidecar.display()
        );
    }
    Ok(())
}

fn csv_files_sorted(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!(
            "run directory {} does not exist",
            dir.display()
        )));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Validation(format!(
            "no metrics CSV files under {}",
            dir.display()
        )));
    }
    Ok(paths)
}

fn registry_from_dir(dir: &Path, reference: &str) -> Result<RunRegistry, CliError> {
    let mut registry = RunRegistry::new(reference);
    for path in csv_files_sorted(dir)? {
        let (meta, records) = files::read_metrics_csv(&path)?;
        registry.add(aggregate(&records, meta)?)?;
    }
    Ok(registry)
}

fn write_rendered(out: &Path, rendered: &crate::report::Rendered) -> Result<(), CliError> {
    let txt = out.with_extension("txt");
    let csv = out.with_extension("csv");
    std::fs::write(&txt, &rendered.text)
        .map_err(|e| CliError::Io(format!("{}: {e}", txt.display())))?;
    std::fs::write(&csv, &rendered.csv)
        .map_err(|e| CliError::Io(format!("{}: {e}", csv.display())))?;
    eprintln!("report: wrote {} and {}", txt.display(), csv.display());
    Ok(())
}

fn run_report_table(args: ReportTableArgs, config: &RunConfig) -> Result<(), CliError> {
    let runs_dir: PathBuf = require(args.runs, config, "runs")?;
    let reference: String = require(args.reference, config, "reference")?;
    let out: PathBuf = require(args.out, config, "out")?;
    let registry = registry_from_dir(&runs_dir, &reference)?;
    let rendered = render_table(&registry)?;
    write_rendered(&out, &rendered)
}

fn run_report_delta(args: ReportDeltaArgs, config: &RunConfig) -> Result<(), CliError> {
    let id_dir: PathBuf = require(args.id, config, "id")?;
    let ood_dir: PathBuf = require(args.ood, config, "ood")?;
    let out: PathBuf = require(args.out, config, "out")?;
    let id_registry = registry_from_dir(&id_dir, "")?;
    let ood_registry = registry_from_dir(&ood_dir, "")?;
    let rendered = render_delta_summary(&id_registry, &ood_registry)?;
    write_rendered(&out, &rendered)
}
