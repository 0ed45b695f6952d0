//! Subcommand implementations and the argument surface.
//!
//! Exit code contract (stable): 0 ok, 1 usage/config, 2 I/O, 3 parse,
//! 4 consistency. Every command appends one line to `run_manifest.jsonl`
//! next to its outputs; the data artifacts themselves are idempotent.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use wz_sentinel_core::conflict::{generate_warnings, ConflictParams, ModePolicy};
use wz_sentinel_core::metrics::{aggregate_reports, joint_metrics, MetricReport};
use wz_sentinel_core::predict::{PredictionSet, PredictorConfig, PredictorKind, VehiclePrediction};
use wz_sentinel_core::sim::{frame_counts, run_case, SimError};
use wz_sentinel_core::traj::{extract_windows, ScenarioCase, MAX_FRAME};
use wz_sentinel_core::Point2;

use crate::error::CliError;
use crate::formats;
use crate::manifest::{
    append_run, config_digest, DatasetCaseEntry, DatasetManifest, PredCaseEntry,
    PredVehicleMeta, PredictionsManifest, RunRecord,
};
use crate::map_io::load_map;
use crate::report::{scatter_svg, trajectory_svg};
use crate::sim_config::load_config;

#[derive(Parser)]
#[command(
    name = "wz-sentinel",
    version,
    about = "Work-zone merge simulation, trajectory prediction, and conflict warning toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a dataset of merge scenarios as per-case CSV files.
    Simulate {
        /// key = value simulation config file.
        #[arg(long)]
        config: PathBuf,
        /// Lane map JSON.
        #[arg(long)]
        map: PathBuf,
        /// Output directory for case CSVs and the dataset manifest.
        #[arg(long)]
        out: PathBuf,
        /// Override n_cases from the config file.
        #[arg(long)]
        cases: Option<u32>,
        /// Override seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict futures for the first observation window of each case.
    Predict {
        /// Directory of trajectory_data_case_<id>.csv files.
        #[arg(long)]
        cases: PathBuf,
        /// Lane map JSON (required by the maneuver predictor, used for
        /// none of the others).
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_enum)]
        predictor: PredictorArg,
        /// Mode count K.
        #[arg(long, default_value_t = 6)]
        modes: usize,
        /// Future steps F.
        #[arg(long, default_value_t = 30)]
        horizon: usize,
        /// History steps H.
        #[arg(long, default_value_t = 10)]
        history: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against ground truth (displacement metrics).
    Evaluate {
        /// Directory produced by `predict`.
        #[arg(long)]
        preds: PathBuf,
        /// Directory of ground-truth case CSVs.
        #[arg(long)]
        gt: PathBuf,
        /// Output metrics CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Scan predictions for conflicts and emit warning records.
    Warn {
        /// Directory produced by `predict`.
        #[arg(long)]
        preds: PathBuf,
        /// Probability decay length in meters; default is calibrated so
        /// the probability threshold fires exactly at the distance
        /// threshold.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 7.0)]
        dist_threshold: f64,
        #[arg(long, default_value_t = 0.70)]
        prob_threshold: f64,
        #[arg(long, value_enum, default_value_t = ModePolicyArg::WorstCase)]
        mode_policy: ModePolicyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render conflict scatter plots (and optional per-case overlays).
    Report {
        /// conflicts.csv produced by `warn`.
        #[arg(long)]
        conflicts: PathBuf,
        /// Restrict to one vehicle pair: --pair I J.
        #[arg(long, num_args = 2, value_names = ["I", "J"])]
        pair: Option<Vec<u32>>,
        #[arg(long)]
        out: PathBuf,
        /// Optional case CSV directory; when given, emits one trajectory
        /// overlay SVG per case appearing in the conflicts file.
        #[arg(long)]
        cases: Option<PathBuf>,
        /// Distance cutoff for the filtered scatter view.
        #[arg(long, default_value_t = 7.0)]
        dist_threshold: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorArg {
    Cv,
    Ctrv,
    Maneuver,
}

impl PredictorArg {
    fn kind(self) -> PredictorKind {
        match self {
            PredictorArg::Cv => PredictorKind::ConstantVelocity,
            PredictorArg::Ctrv => PredictorKind::ConstantTurnRate,
            PredictorArg::Maneuver => PredictorKind::Maneuver,
        }
    }

    fn name(self) -> &'static str {
        match self {
            PredictorArg::Cv => "cv",
            PredictorArg::Ctrv => "ctrv",
            PredictorArg::Maneuver => "maneuver",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModePolicyArg {
    #[value(name = "worst_case")]
    WorstCase,
    #[value(name = "best_mode")]
    BestMode,
    #[value(name = "expected")]
    Expected,
}

impl ModePolicyArg {
    fn policy(self) -> ModePolicy {
        match self {
            ModePolicyArg::WorstCase => ModePolicy::WorstCase,
            ModePolicyArg::BestMode => ModePolicy::BestMode,
            ModePolicyArg::Expected => ModePolicy::Expected,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModePolicyArg::WorstCase => "worst_case",
            ModePolicyArg::BestMode => "best_mode",
            ModePolicyArg::Expected => "expected",
        }
    }
}

/// Full CLI entry point: parses args, dispatches, converts everything to
/// an exit code. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{}", e);
                return 0;
            }
            eprint!("{}", e);
            return 1;
        }
    };
    if let Err(e) = init_thread_pool() {
        eprintln!("{}", e);
        return e.exit_code();
    }
    let result = match cli.command {
        Command::Simulate {
            config,
            map,
            out,
            cases,
            seed,
        } => cmd_simulate(&config, &map, &out, cases, seed),
        Command::Predict {
            cases,
            map,
            predictor,
            modes,
            horizon,
            history,
            out,
        } => cmd_predict(&cases, &map, predictor, modes, horizon, history, &out),
        Command::Evaluate { preds, gt, out } => cmd_evaluate(&preds, &gt, &out),
        Command::Warn {
            preds,
            lambda,
            dist_threshold,
            prob_threshold,
            mode_policy,
            out,
        } => cmd_warn(&preds, lambda, dist_threshold, prob_threshold, mode_policy, &out),
        Command::Report {
            conflicts,
            pair,
            out,
            cases,
            dist_threshold,
        } => cmd_report(&conflicts, pair.as_deref(), &out, cases.as_deref(), dist_threshold),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e);
            e.exit_code()
        }
    }
}

/// `WZ_SENTINEL_THREADS` caps internal parallelism. The global pool can
/// only be installed once per process; a second invocation (tests drive
/// `run` repeatedly) keeps the first cap, which is fine for a cap.
fn init_thread_pool() -> Result<(), CliError> {
    match std::env::var("WZ_SENTINEL_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "WZ_SENTINEL_THREADS must be a positive integer, got {:?}",
                        raw
                    ))
                })?;
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, &e))
}

// --- simulate -----------------------------------------------------------

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::BadConfig(_) | SimError::MissingClosure | SimError::DensityUnreachable { .. } => {
            CliError::Usage(e.to_string())
        }
        SimError::Internal(_) => CliError::Consistency(e.to_string()),
    }
}

pub fn cmd_simulate(
    config_path: &Path,
    map_path: &Path,
    out: &Path,
    cases_override: Option<u32>,
    seed_override: Option<u64>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let mut config = load_config(config_path)?;
    if let Some(n) = cases_override {
        config.n_cases = n;
    }
    if let Some(s) = seed_override {
        config.seed = s;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let map = load_map(map_path)?;
    ensure_dir(out)?;

    let cases: Vec<ScenarioCase> = (1..=config.n_cases)
        .into_par_iter()
        .map(|case_id| run_case(&config, &map, case_id).map_err(sim_error))
        .collect::<Result<_, _>>()?;

    let mut entries = Vec::with_capacity(cases.len());
    for case in &cases {
        let path = formats::write_case(out, case)?;
        // peak simultaneous vehicles, the quantity the density band
        // constrains; distinct track count can exceed it when vehicles
        // hand over mid-window
        let n_vehicles = frame_counts(case)
            .into_iter()
            .map(|(_, n)| n)
            .max()
            .unwrap_or(0);
        entries.push(DatasetCaseEntry {
            case_id: case.case_id,
            n_vehicles,
            file: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        });
    }
    let manifest = DatasetManifest {
        seed: config.seed,
        config_digest: config_digest(&config),
        cases: entries,
    };
    manifest.save(&out.join("dataset_manifest.json"))?;

    append_run(
        out,
        &RunRecord {
            subcommand: "simulate".into(),
            version: crate::manifest::tool_version().into(),
            inputs: vec![config_path.display().to_string(), map_path.display().to_string()],
            outputs: vec![out.display().to_string()],
            params: vec![
                ("seed".into(), config.seed.to_string()),
                ("n_cases".into(), config.n_cases.to_string()),
                ("config_digest".into(), manifest.config_digest.clone()),
            ],
            duration_ms: started.elapsed().as_millis() as u64,
        },
    )
}

// --- predict ------------------------------------------------------------

fn predict_error(e: wz_sentinel_core::predict::PredictError) -> CliError {
    use wz_sentinel_core::predict::PredictError as PE;
    match e {
        PE::BadConfig(_) => CliError::Usage(e.to_string()),
        _ => CliError::Consistency(e.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_predict(
    cases_dir: &Path,
    map_path: &Path,
    predictor: PredictorArg,
    modes: usize,
    horizon: usize,
    history: usize,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    if modes < 1 {
        return Err(CliError::Usage("--modes must be >= 1".into()));
    }
    if history < 1 || horizon < 1 {
        return Err(CliError::Usage("--history and --horizon must be >= 1".into()));
    }
    if history + horizon > MAX_FRAME as usize {
        return Err(CliError::Usage(format!(
            "--history + --horizon must fit inside a {}-frame case",
            MAX_FRAME
        )));
    }
    let map = load_map(map_path)?;
    let case_files = formats::list_case_files(cases_dir)?;
    if case_files.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no trajectory_data_case_<id>.csv files found",
            cases_dir.display()
        )));
    }
    ensure_dir(out)?;

    let config = PredictorConfig {
        modes,
        horizon,
        ..PredictorConfig::default()
    };

    let mut case_entries = Vec::with_capacity(case_files.len());
    for (case_id, path) in &case_files {
        let case = formats::read_case(path)?;
        let windows = extract_windows(&case, history, horizon)
            .map_err(|e| CliError::Consistency(format!("{}: {}", path.display(), e)))?;
        // one prediction per case, issued at the earliest complete window
        let window = windows.first().ok_or_else(|| {
            CliError::Consistency(format!(
                "{}: no window has a vehicle covering {}+{} frames",
                path.display(),
                history,
                horizon
            ))
        })?;
        let set = predictor
            .kind()
            .run(window, Some(&map), &config)
            .map_err(predict_error)?;

        let file = formats::prediction_file_name(*case_id);
        let csv_path = out.join(&file);
        std::fs::write(&csv_path, formats::render_predictions(&set))
            .map_err(|e| CliError::io(&csv_path, &e))?;

        let mut vehicles: Vec<PredVehicleMeta> = set
            .vehicles
            .iter()
            .map(|v| PredVehicleMeta {
                track_id: v.track_id,
                agent_type: v.agent_type.as_str().into(),
                length: v.length,
                width: v.width,
                origin: [v.origin.x, v.origin.y],
                heading0: v.heading0,
            })
            .collect();
        vehicles.sort_by_key(|v| v.track_id);
        case_entries.push(PredCaseEntry {
            case_id: *case_id,
            issue_frame: set.frame_id,
            file,
            vehicles,
        });
    }

    let manifest = PredictionsManifest {
        predictor: predictor.name().into(),
        modes,
        history,
        horizon,
        dt: config.dt,
        cases: case_entries,
    };
    manifest.save(&out.join("predictions_manifest.json"))?;

    append_run(
        out,
        &RunRecord {
            subcommand: "predict".into(),
            version: crate::manifest::tool_version().into(),
            inputs: vec![cases_dir.display().to_string(), map_path.display().to_string()],
            outputs: vec![out.display().to_string()],
            params: vec![
                ("predictor".into(), predictor.name().into()),
                ("modes".into(), modes.to_string()),
                ("history".into(), history.to_string()),
                ("horizon".into(), horizon.to_string()),
            ],
            duration_ms: started.elapsed().as_millis() as u64,
        },
    )
}

// --- shared prediction loading -------------------------------------------

/// Rebuilds full prediction sets from a predict output directory: CSV rows
/// plus manifest metadata (footprints, origins, issue frames).
fn load_prediction_sets(
    preds_dir: &Path,
) -> Result<(PredictionsManifest, Vec<(u32, PredictionSet)>), CliError> {
    let manifest = PredictionsManifest::load(&preds_dir.join("predictions_manifest.json"))?;
    let mut sets = Vec::with_capacity(manifest.cases.len());
    for entry in &manifest.cases {
        let csv_path = preds_dir.join(&entry.file);
        let raw = formats::read_predictions(&csv_path)?;
        let mut vehicles = Vec::with_capacity(raw.len());
        for (track_id, modes, mut probs) in raw {
            let meta = entry
                .vehicles
                .iter()
                .find(|m| m.track_id == track_id)
                .ok_or_else(|| {
                    CliError::Consistency(format!(
                        "case {}: track {} present in {} but missing from the manifest",
                        entry.case_id,
                        track_id,
                        entry.file
                    ))
                })?;
            let agent_type = wz_sentinel_core::traj::AgentType::parse(&meta.agent_type)
                .ok_or_else(|| {
                    CliError::Consistency(format!(
                        "case {}: track {}: unknown agent_type {:?} in manifest",
                        entry.case_id, track_id, meta.agent_type
                    ))
                })?;
            // probabilities were rounded to 6 decimals on export; undo the
            // drift, but refuse anything that is not a rounding artifact
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-3 {
                return Err(CliError::Consistency(format!(
                    "case {}: track {}: mode probabilities sum to {}",
                    entry.case_id, track_id, total
                )));
            }
            for p in &mut probs {
                *p /= total;
            }
            let vehicle = VehiclePrediction::new(
                track_id,
                agent_type,
                meta.length,
                meta.width,
                Point2::new(meta.origin[0], meta.origin[1]),
                meta.heading0,
                modes,
                probs,
            )
            .map_err(|e| {
                CliError::Consistency(format!(
                    "case {}: track {}: {}",
                    entry.case_id, track_id, e
                ))
            })?;
            vehicles.push(vehicle);
        }
        let set = PredictionSet::new(entry.issue_frame, manifest.horizon, manifest.dt, vehicles)
            .map_err(|e| CliError::Consistency(format!("case {}: {}", entry.case_id, e)))?;
        sets.push((entry.case_id, set));
    }
    Ok((manifest, sets))
}

// --- evaluate -------------------------------------------------------------

pub fn cmd_evaluate(preds_dir: &Path, gt_dir: &Path, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let (manifest, sets) = load_prediction_sets(preds_dir)?;
    let mut rows: Vec<(String, MetricReport)> = Vec::with_capacity(sets.len() + 1);
    let mut reports = Vec::with_capacity(sets.len());
    for (case_id, set) in &sets {
        let gt_path = gt_dir.join(formats::case_file_name(*case_id));
        let case = formats::read_case(&gt_path)?;
        let truth = truth_for(&case, set, manifest.horizon)?;
        let report = joint_metrics(set, &truth)
            .map_err(|e| CliError::Consistency(format!("case {}: {}", case_id, e)))?;
        rows.push((case_id.to_string(), report.clone()));
        reports.push(report);
    }
    let all = aggregate_reports(&reports).ok_or_else(|| {
        CliError::Consistency("cases disagree in mode count; cannot aggregate".into())
    })?;
    rows.push(("ALL".into(), all));
    std::fs::write(out, formats::render_metrics(&rows)).map_err(|e| CliError::io(out, &e))?;

    let log_dir = out.parent().filter(|p| !p.as_os_str().is_empty());
    append_run(
        log_dir.unwrap_or_else(|| Path::new(".")),
        &RunRecord {
            subcommand: "evaluate".into(),
            version: crate::manifest::tool_version().into(),
            inputs: vec![preds_dir.display().to_string(), gt_dir.display().to_string()],
            outputs: vec![out.display().to_string()],
            params: vec![("predictor".into(), manifest.predictor.clone())],
            duration_ms: started.elapsed().as_millis() as u64,
        },
    )
}

/// Ground-truth futures for every predicted vehicle: positions over the F
/// frames after the issue frame. A predicted vehicle without full truth
/// coverage is a consistency error; extra ground-truth vehicles are fine
/// (they simply were not predictable over the window).
fn truth_for(
    case: &ScenarioCase,
    set: &PredictionSet,
    horizon: usize,
) -> Result<Vec<(u32, Vec<Point2>)>, CliError> {
    let mut truth = Vec::with_capacity(set.vehicles.len());
    for v in &set.vehicles {
        let track = case.track(v.track_id).ok_or_else(|| {
            CliError::Consistency(format!(
                "case {}: predicted track {} absent from ground truth",
                case.case_id, v.track_id
            ))
        })?;
        let mut future = Vec::with_capacity(horizon);
        for k in 1..=horizon as u32 {
            let p = track.at_frame(set.frame_id + k).ok_or_else(|| {
                CliError::Consistency(format!(
                    "case {}: track {} missing ground truth at frame {}",
                    case.case_id,
                    v.track_id,
                    set.frame_id + k
                ))
            })?;
            future.push(p.position());
        }
        truth.push((v.track_id, future));
    }
    Ok(truth)
}

// --- warn ------------------------------------------------------------------

pub fn cmd_warn(
    preds_dir: &Path,
    lambda: Option<f64>,
    dist_threshold: f64,
    prob_threshold: f64,
    mode_policy: ModePolicyArg,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let params = ConflictParams {
        lambda: lambda.unwrap_or_else(|| ConflictParams::default().lambda),
        dist_threshold,
        prob_threshold,
    };
    params
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (_, sets) = load_prediction_sets(preds_dir)?;
    ensure_dir(out)?;

    let mut conflicts = Vec::new();
    let mut warnings = Vec::new();
    for (case_id, set) in &sets {
        let (recs, warns) = generate_warnings(set, &params, mode_policy.policy());
        conflicts.extend(recs.into_iter().map(|r| (*case_id, r)));
        warnings.extend(warns.into_iter().map(|w| (*case_id, w)));
    }
    let conflicts_path = out.join("conflicts.csv");
    std::fs::write(&conflicts_path, formats::render_conflicts(&conflicts))
        .map_err(|e| CliError::io(&conflicts_path, &e))?;
    let warnings_path = out.join("warnings.csv");
    std::fs::write(&warnings_path, formats::render_warnings(&warnings))
        .map_err(|e| CliError::io(&warnings_path, &e))?;

    append_run(
        out,
        &RunRecord {
            subcommand: "warn".into(),
            version: crate::manifest::tool_version().into(),
            inputs: vec![preds_dir.display().to_string()],
            outputs: vec![
                conflicts_path.display().to_string(),
                warnings_path.display().to_string(),
            ],
            params: vec![
                ("lambda".into(), params.lambda.to_string()),
                ("dist_threshold".into(), params.dist_threshold.to_string()),
                ("prob_threshold".into(), params.prob_threshold.to_string()),
                ("mode_policy".into(), mode_policy.name().into()),
            ],
            duration_ms: started.elapsed().as_millis() as u64,
        },
    )
}

// --- report ------------------------------------------------------------------

pub fn cmd_report(
    conflicts_path: &Path,
    pair: Option<&[u32]>,
    out: &Path,
    cases_dir: Option<&Path>,
    dist_threshold: f64,
) -> Result<(), CliError> {
    let started = Instant::now();
    if !(dist_threshold.is_finite() && dist_threshold > 0.0) {
        return Err(CliError::Usage("--dist-threshold must be > 0".into()));
    }
    let mut rows = formats::read_conflicts(conflicts_path)?;
    if let Some(pair) = pair {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        rows.retain(|r| r.track_i == a && r.track_j == b);
        if rows.is_empty() {
            return Err(CliError::Usage(format!(
                "pair ({}, {}) does not appear in {}",
                a,
                b,
                conflicts_path.display()
            )));
        }
    }
    ensure_dir(out)?;

    let all_svg = scatter_svg(&rows, "conflict probability vs distance", dist_threshold, 0.7);
    let scatter_path = out.join("scatter.svg");
    std::fs::write(&scatter_path, all_svg).map_err(|e| CliError::io(&scatter_path, &e))?;

    let near: Vec<_> = rows
        .iter()
        .filter(|r| r.distance_m < dist_threshold)
        .cloned()
        .collect();
    let near_svg = scatter_svg(
        &near,
        "interactions below the distance threshold",
        dist_threshold,
        0.7,
    );
    let near_path = out.join("scatter_conflicts.svg");
    std::fs::write(&near_path, near_svg).map_err(|e| CliError::io(&near_path, &e))?;

    let mut outputs = vec![
        scatter_path.display().to_string(),
        near_path.display().to_string(),
    ];
    if let Some(dir) = cases_dir {
        let mut case_ids: Vec<u32> = rows.iter().map(|r| r.case_id).collect();
        case_ids.sort_unstable();
        case_ids.dedup();
        for case_id in case_ids {
            let case = formats::read_case(&dir.join(formats::case_file_name(case_id)))?;
            let svg_path = out.join(format!("trajectories_case_{}.svg", case_id));
            std::fs::write(&svg_path, trajectory_svg(&case))
                .map_err(|e| CliError::io(&svg_path, &e))?;
            outputs.push(svg_path.display().to_string());
        }
    }

    append_run(
        out,
        &RunRecord {
            subcommand: "report".into(),
            version: crate::manifest::tool_version().into(),
            inputs: vec![conflicts_path.display().to_string()],
            outputs,
            params: vec![("dist_threshold".into(), dist_threshold.to_string())],
            duration_ms: started.elapsed().as_millis() as u64,
        },
    )
}
