use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use vread::config::{NdtSource, PipelineConfig};
use vread::dwell_stats::{histogram_ln_dwell, DwellStats, StatsAccumulator};
use vread::error::{Error, Result};
use vread::evaluator::{migration_report, write_migration_csv, ActivenessBoundaries, DecileMode, EvalReport};
use vread::ingest::{open_log, scan_log, write_events, Pass, ScanOptions};
use vread::labeler::{composition_report, label_all, read_labeled, write_labeled, LabelKind, LabeledEvent};
use vread::mtl_model::CHECKPOINT_VERSION;
use vread::ndt::{NdtParams, NegMode};
use vread::profiles::{ProfileStore, PROFILE_VERSION};
use vread::simgen::{generate, write_sidecar, SimConfig};
use vread::trainer::{chronological_split, fit, write_loss_trace, Objective, TrainedModel};

const LOG_FORMAT_VERSION: u32 = 1;
const LABELED_FORMAT_VERSION: u32 = 1;
const JSON_FORMAT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "vread", about = "Valid-read labeling, dwell-time weighting and two-tower training", disable_version_flag = true)]
struct Cli {
    /// Pipeline config (TOML); flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed for simulation and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Input logs start with a header line.
    #[arg(long, global = true)]
    header: bool,
    /// Number of malformed lines to skip before failing.
    #[arg(long, global = true)]
    bad_line_budget: Option<usize>,
    /// Print the program version and the versions of every file format.
    #[arg(short = 'V', long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic event log and its ground-truth sidecar.
    Simulate(SimulateArgs),
    /// Fit the log-normal dwell-time model and write thresholds as JSON.
    FitStats(FitStatsArgs),
    /// Histogram of ln(dwell time) over clicks as CSV.
    StatsReport(StatsReportArgs),
    /// Build per-item dwell-time and per-user click profiles.
    BuildProfiles(BuildProfilesArgs),
    /// Label every event as not clicked, noise, invalid or valid read.
    Label(LabelArgs),
    /// Write normalized dwell-time parameters as JSON.
    NdtParams(NdtParamsArgs),
    /// Train the two-tower model on labeled events.
    Train(TrainArgs),
    /// Valid-read AUC on the held-out tail of a labeled log.
    Eval(EvalArgs),
    /// Dwell-time migration by activeness level and decile between two logs.
    MigrateReport(MigrateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Simulation config (TOML); defaults to the `[sim]` table or built-in defaults.
    #[arg(long)]
    sim_config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long)]
    n_users: Option<usize>,
    #[arg(long)]
    n_items: Option<usize>,
}

#[derive(Args, Debug)]
struct FitStatsArgs {
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsReportArgs {
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildProfilesArgs {
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LabelArgs {
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional JSON with label counts and rule shares.
    #[arg(long)]
    composition: Option<PathBuf>,
    #[arg(long)]
    min_records_t3: Option<u64>,
}

#[derive(Args, Debug)]
struct NdtParamsArgs {
    /// Needed for `--source solved`.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// paper_default or solved.
    #[arg(long)]
    source: Option<NdtSource>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    ndt: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    loss_trace: Option<PathBuf>,
    /// single_ctr, ctr_logdt, vr_logdt or vr_ndt.
    #[arg(long)]
    objective: Option<Objective>,
    /// unit or literal.
    #[arg(long)]
    neg_mode: Option<NegMode>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    emb_dim: Option<usize>,
    #[arg(long)]
    bottom_width: Option<usize>,
    #[arg(long, num_args = 2, value_names = ["H1", "H2"])]
    tower_hidden: Option<Vec<usize>>,
    #[arg(long)]
    holdout_frac: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Model whose AUC on the same holdout is the RelaImpr baseline.
    #[arg(long, conflicts_with = "base_auc")]
    baseline_checkpoint: Option<PathBuf>,
    #[arg(long)]
    base_auc: Option<f64>,
    #[arg(long)]
    holdout_frac: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MigrateArgs {
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    treatment: Option<PathBuf>,
    /// Six ascending weekly-click cut points.
    #[arg(long, num_args = 6, value_delimiter = ',')]
    boundaries: Option<Vec<u64>>,
    /// One decile cut over all clicks instead of one per level.
    #[arg(long)]
    global_deciles: bool,
    /// Add a `delta_pct` column.
    #[arg(long)]
    pct: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Resolved inputs shared by every command.
struct Ctx {
    cfg: PipelineConfig,
    scan: ScanOptions,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.cfg.seed()
    }
}

fn input(flag: &Option<PathBuf>, fallback: &Option<PathBuf>, name: &'static str) -> Result<PathBuf> {
    let path = flag
        .clone()
        .or_else(|| fallback.clone())
        .ok_or_else(|| Error::InvalidArgument(format!("no path given for input {name}")))?;
    if !path.is_file() {
        return Err(Error::MissingInput { name, path });
    }
    Ok(path)
}

fn output(flag: &Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| fallback.clone())
        .ok_or_else(|| Error::InvalidArgument(format!("no path given for output {name}")))
}

/// Writes via a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Serialize, Deserialize)]
struct StatsDoc {
    #[serde(flatten)]
    stats: DwellStats,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct NdtDoc {
    source: NdtSource,
    #[serde(flatten)]
    params: NdtParams,
    seed: u64,
}

fn read_stats(path: &Path) -> Result<DwellStats> {
    let doc: StatsDoc = read_json(path)?;
    Ok(doc.stats)
}

fn simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<serde_json::Value> {
    let mut sim = match a.sim_config.as_ref().or(ctx.cfg.paths.sim_config.as_ref()) {
        Some(p) => {
            if !p.is_file() {
                return Err(Error::MissingInput { name: "sim-config", path: p.clone() });
            }
            SimConfig::from_toml_str(&std::fs::read_to_string(p)?)?
        }
        None => ctx.cfg.sim.clone().unwrap_or_default(),
    };
    if let Some(s) = ctx.cfg.seed {
        sim.seed = s;
    }
    if let Some(n) = a.n_users {
        sim.n_users = n;
    }
    if let Some(n) = a.n_items {
        sim.n_items = n;
    }
    let out_path = output(&a.out, &ctx.cfg.paths.log, "log")?;
    let sidecar = a.sidecar.clone().or_else(|| ctx.cfg.paths.sidecar.clone());
    let out = generate(&sim)?;
    let mut buf = Vec::new();
    write_events(&mut buf, &out.events, ctx.scan.has_header)?;
    write_atomic(&out_path, &buf)?;
    let mut outputs = vec![out_path.display().to_string()];
    if let Some(p) = sidecar {
        let mut buf = Vec::new();
        write_sidecar(&mut buf, &out)?;
        write_atomic(&p, &buf)?;
        outputs.push(p.display().to_string());
    }
    Ok(json!({
        "events": out.events.len(),
        "clicks": out.events.iter().filter(|e| e.clicked).count(),
        "seed": sim.seed,
        "outputs": outputs,
    }))
}

fn fit_stats(ctx: &Ctx, a: &FitStatsArgs) -> Result<serde_json::Value> {
    let log = input(&a.log, &ctx.cfg.paths.log, "log")?;
    let out_path = output(&a.out, &ctx.cfg.paths.stats, "stats")?;
    let mut acc = StatsAccumulator::new();
    let mut reader = open_log(&log, ctx.scan)?;
    for e in reader.by_ref() {
        acc.push(&e?);
    }
    let stats = acc.finalize()?;
    let doc = StatsDoc { stats, seed: ctx.seed() };
    write_json(&out_path, &doc)?;
    Ok(json!({ "stats": doc, "skipped": reader.skipped(), "outputs": [out_path.display().to_string()] }))
}

fn stats_report(ctx: &Ctx, a: &StatsReportArgs) -> Result<serde_json::Value> {
    let log = input(&a.log, &ctx.cfg.paths.log, "log")?;
    let out_path = output(&a.out, &ctx.cfg.paths.histogram, "histogram")?;
    let bins = a.bins.unwrap_or(ctx.cfg.eval.histogram_bins);
    let scan = scan_log(&log, Pass::Stats, ctx.scan)?;
    let hist = histogram_ln_dwell(&scan.events, bins)?;
    let mut buf = b"bin_center,count\n".to_vec();
    for b in &hist {
        writeln!(buf, "{},{}", b.center, b.count)?;
    }
    write_atomic(&out_path, &buf)?;
    let n: u64 = hist.iter().map(|b| b.count).sum();
    Ok(json!({ "bins": hist.len(), "n": n, "outputs": [out_path.display().to_string()] }))
}

fn build_profiles(ctx: &Ctx, a: &BuildProfilesArgs) -> Result<serde_json::Value> {
    let log = input(&a.log, &ctx.cfg.paths.log, "log")?;
    let out_path = output(&a.out, &ctx.cfg.paths.profiles, "profiles")?;
    let mut store = ProfileStore::new();
    let mut reader = open_log(&log, ctx.scan)?;
    for e in reader.by_ref() {
        store.observe(&e?)?;
    }
    let mut buf = Vec::new();
    store.write(&mut buf, ctx.seed())?;
    write_atomic(&out_path, &buf)?;
    Ok(json!({
        "items": store.items.len(),
        "users": store.users.len(),
        "skipped": reader.skipped(),
        "outputs": [out_path.display().to_string()],
    }))
}

fn label(ctx: &Ctx, a: &LabelArgs) -> Result<serde_json::Value> {
    let log = input(&a.log, &ctx.cfg.paths.log, "log")?;
    let stats_path = input(&a.stats, &ctx.cfg.paths.stats, "stats")?;
    let profiles_path = input(&a.profiles, &ctx.cfg.paths.profiles, "profiles")?;
    let out_path = output(&a.out, &ctx.cfg.paths.labeled, "labeled")?;
    let composition_path = a.composition.clone().or_else(|| ctx.cfg.paths.composition.clone());
    let mut label_cfg = ctx.cfg.label;
    if let Some(m) = a.min_records_t3 {
        label_cfg.min_records_t3 = m;
    }
    let stats = read_stats(&stats_path)?;
    let (store, _) = ProfileStore::read(&mut BufReader::new(File::open(&profiles_path)?))?;
    let scan = scan_log(&log, Pass::Label, ctx.scan)?;
    let labeled = label_all(&scan.events, &stats, &store, &label_cfg);
    let mut buf = Vec::new();
    write_labeled(&mut buf, &labeled, true)?;
    write_atomic(&out_path, &buf)?;
    let report = composition_report(labeled.iter().map(|l| &l.label));
    let mut outputs = vec![out_path.display().to_string()];
    if let Some(p) = composition_path {
        write_json(&p, &json!({ "composition": report, "seed": ctx.seed() }))?;
        outputs.push(p.display().to_string());
    }
    Ok(json!({ "composition": report, "skipped": scan.skipped, "outputs": outputs }))
}

fn ndt_params(ctx: &Ctx, a: &NdtParamsArgs) -> Result<serde_json::Value> {
    let mut settings = ctx.cfg.ndt;
    if let Some(s) = a.source {
        settings.source = s;
    }
    let out_path = output(&a.out, &ctx.cfg.paths.ndt, "ndt")?;
    let params = match settings.source {
        NdtSource::PaperDefault => NdtParams::paper_default(),
        NdtSource::Solved => {
            let stats_path = input(&a.stats, &ctx.cfg.paths.stats, "stats")?;
            settings.params(&read_stats(&stats_path)?)?
        }
    };
    let doc = NdtDoc { source: settings.source, params, seed: ctx.seed() };
    write_json(&out_path, &doc)?;
    Ok(json!({ "ndt": doc, "outputs": [out_path.display().to_string()] }))
}

fn read_labeled_file(path: &Path) -> Result<Vec<LabeledEvent>> {
    read_labeled(&std::fs::read_to_string(path)?)
}

fn train_cmd(ctx: &Ctx, a: &TrainArgs) -> Result<serde_json::Value> {
    let labeled_path = input(&a.labeled, &ctx.cfg.paths.labeled, "labeled")?;
    let ndt_path = input(&a.ndt, &ctx.cfg.paths.ndt, "ndt")?;
    let out_path = output(&a.out, &ctx.cfg.paths.checkpoint, "checkpoint")?;
    let trace_path = a.loss_trace.clone().or_else(|| ctx.cfg.paths.loss_trace.clone());
    let mut cfg = ctx.cfg.train.clone();
    cfg.seed = ctx.cfg.seed.unwrap_or(cfg.seed);
    if let Some(o) = a.objective {
        cfg.objective = o;
    }
    if let Some(m) = a.neg_mode {
        cfg.neg_mode = m;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.emb_dim {
        cfg.emb_dim = v;
    }
    if let Some(v) = a.bottom_width {
        cfg.bottom_width = v;
    }
    if let Some(v) = &a.tower_hidden {
        cfg.tower_hidden = [v[0], v[1]];
    }
    cfg.validate()?;
    let holdout = a.holdout_frac.unwrap_or(ctx.cfg.holdout_frac);
    let doc: NdtDoc = read_json(&ndt_path)?;
    doc.params.validate()?;
    let labeled = read_labeled_file(&labeled_path)?;
    let (train_set, _) = chronological_split(&labeled, |l| l.event.timestamp, holdout)?;
    if train_set.is_empty() {
        return Err(Error::InsufficientData("no events left for training".into()));
    }
    let (model, trace) = fit(&train_set, &doc.params, &cfg)?;
    let mut buf = Vec::new();
    model.save(&mut buf)?;
    write_atomic(&out_path, &buf)?;
    let mut outputs = vec![out_path.display().to_string()];
    if let Some(p) = trace_path {
        let mut buf = Vec::new();
        write_loss_trace(&mut buf, &trace)?;
        write_atomic(&p, &buf)?;
        outputs.push(p.display().to_string());
    }
    Ok(json!({
        "objective": cfg.objective,
        "neg_mode": cfg.neg_mode,
        "seed": cfg.seed,
        "train_events": train_set.len(),
        "params": model.net.n_params(),
        "final_loss": trace.last(),
        "outputs": outputs,
    }))
}

fn holdout_auc(model: &TrainedModel, holdout: &[LabeledEvent]) -> Result<EvalReport> {
    let scores = holdout
        .iter()
        .map(|l| model.ranking_score(&l.event))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<bool> = holdout.iter().map(|l| l.label.kind == LabelKind::ValidRead).collect();
    EvalReport::new(&scores, &labels, None)
}

fn load_model(path: &Path) -> Result<TrainedModel> {
    TrainedModel::load(&mut BufReader::new(File::open(path)?))
}

fn eval_cmd(ctx: &Ctx, a: &EvalArgs) -> Result<serde_json::Value> {
    let labeled_path = input(&a.labeled, &ctx.cfg.paths.labeled, "labeled")?;
    let ckpt = input(&a.checkpoint, &ctx.cfg.paths.checkpoint, "checkpoint")?;
    let baseline = match a.baseline_checkpoint.as_ref().or(ctx.cfg.paths.baseline_checkpoint.as_ref()) {
        Some(p) if a.base_auc.is_none() => Some(input(&Some(p.clone()), &None, "baseline-checkpoint")?),
        _ => None,
    };
    let out_path = output(&a.out, &ctx.cfg.paths.eval, "eval")?;
    let holdout_frac = a.holdout_frac.unwrap_or(ctx.cfg.holdout_frac);
    let labeled = read_labeled_file(&labeled_path)?;
    let (_, holdout) = chronological_split(&labeled, |l| l.event.timestamp, holdout_frac)?;
    let model = load_model(&ckpt)?;
    let mut report = holdout_auc(&model, &holdout)?;
    let base_auc = match baseline {
        Some(p) => Some(holdout_auc(&load_model(&p)?, &holdout)?.auc),
        None => a.base_auc.or(ctx.cfg.eval.base_auc),
    };
    if let Some(b) = base_auc {
        report.base_auc = Some(b);
        report.relaimpr = Some(vread::evaluator::relaimpr(report.auc, b)?);
    }
    let doc = json!({
        "auc": report.auc,
        "base_auc": report.base_auc,
        "relaimpr": report.relaimpr,
        "n_pos": report.n_pos,
        "n_neg": report.n_neg,
        "objective": model.objective,
        "seed": model.seed,
        "holdout_frac": holdout_frac,
        "format_version": JSON_FORMAT_VERSION,
    });
    write_json(&out_path, &doc)?;
    Ok(json!({ "eval": doc, "outputs": [out_path.display().to_string()] }))
}

fn migrate(ctx: &Ctx, a: &MigrateArgs) -> Result<serde_json::Value> {
    let base_path = input(&a.baseline, &ctx.cfg.paths.baseline_log, "baseline-log")?;
    let treat_path = input(&a.treatment, &ctx.cfg.paths.treatment_log, "treatment-log")?;
    let out_path = output(&a.out, &ctx.cfg.paths.migration, "migration")?;
    let boundaries = match a.boundaries.as_ref().map(|v| v.as_slice()).or(ctx.cfg.eval.boundaries.as_ref().map(|b| b.as_slice())) {
        Some(b) => {
            let arr: [u64; 6] = b
                .try_into()
                .map_err(|_| Error::InvalidArgument("expected six boundaries".into()))?;
            Some(ActivenessBoundaries::new(arr)?)
        }
        None => None,
    };
    let mode = if a.global_deciles || ctx.cfg.eval.global_deciles {
        DecileMode::Global
    } else {
        DecileMode::WithinLevel
    };
    let base = scan_log(&base_path, Pass::Stats, ctx.scan)?;
    let treat = scan_log(&treat_path, Pass::Stats, ctx.scan)?;
    let cells = migration_report(&base.events, &treat.events, boundaries, mode)?;
    let mut buf = Vec::new();
    write_migration_csv(&mut buf, &cells, a.pct || ctx.cfg.eval.delta_pct)?;
    write_atomic(&out_path, &buf)?;
    let filled = cells.iter().filter(|c| c.delta.is_some()).count();
    Ok(json!({ "cells": cells.len(), "filled_cells": filled, "outputs": [out_path.display().to_string()] }))
}

fn version_text() -> String {
    format!(
        "vread {}\nevent-log csv {LOG_FORMAT_VERSION}\nlabeled-log csv {LABELED_FORMAT_VERSION}\nprofile-store VRPF {PROFILE_VERSION}\ncheckpoint VRMT {CHECKPOINT_VERSION}\njson reports {JSON_FORMAT_VERSION}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let scan = ScanOptions {
        has_header: cli.header || cfg.scan.has_header,
        bad_line_budget: cli.bad_line_budget.unwrap_or(cfg.scan.bad_line_budget),
    };
    let ctx = Ctx { cfg, scan };
    let Some(command) = cli.command else {
        return Err(Error::InvalidArgument("no command given; see --help".into()));
    };
    let (name, summary) = match &command {
        Command::Simulate(a) => ("simulate", simulate(&ctx, a)?),
        Command::FitStats(a) => ("fit-stats", fit_stats(&ctx, a)?),
        Command::StatsReport(a) => ("stats-report", stats_report(&ctx, a)?),
        Command::BuildProfiles(a) => ("build-profiles", build_profiles(&ctx, a)?),
        Command::Label(a) => ("label", label(&ctx, a)?),
        Command::NdtParams(a) => ("ndt-params", ndt_params(&ctx, a)?),
        Command::Train(a) => ("train", train_cmd(&ctx, a)?),
        Command::Eval(a) => ("eval", eval_cmd(&ctx, a)?),
        Command::MigrateReport(a) => ("migrate-report", migrate(&ctx, a)?),
    };
    Ok(json!({ "status": "ok", "command": name, "summary": summary }))
}

fn fail(code: u8, reason: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "status": "error", "reason": reason, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid usage");
            return fail(1, "usage", first.trim_start_matches("error: "));
        }
    };
    if cli.version {
        print!("{}", version_text());
        return ExitCode::SUCCESS;
    }
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(if e.is_validation() { 1 } else { 2 }, &e.reason_code(), &e.to_string()),
    }
}
