//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.
//! Every JSON report carries a `config` object with the resolved settings
//! that determine its content. Output paths and the thread count are left
//! out of the echo because they do not affect results.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::diffusion::{
    forward_noise, linear_schedule, oracle_features, sample_noise_keyed, AlphaIndex, NoiseSchedule, OracleConfig,
    OracleProfile,
};
use crate::discriminability::{align_series, correlate, fisher_score, pool_map, read_series, LabeledEmbeddingSet};
use crate::error::Error;
use crate::selection::{average_hfr, select_timestep, HfrCurve, DEFAULT_TIE_EPSILON};
use crate::spectral::{decompose, gaussian_highpass_mask, DEFAULT_CUTOFF};
use crate::tensor_io::{
    load_entry, load_manifest, read_tensor, write_atomic, write_tensor, DatasetManifest, Dtype, FeatureMeta,
    ManifestEntry,
};

pub const DEFAULT_TOTAL_TIMESTEPS: u32 = 1000;

#[derive(Debug, Parser)]
#[command(name = "aselect", version, about = "High-frequency-ratio timestep selection for diffusion features")]
pub struct Cli {
    /// Worker threads: a positive count or `auto`. Results do not depend on it.
    #[arg(long, global = true, default_value = "auto", value_parser = parse_threads)]
    pub threads: Threads,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Count(usize),
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads::Count(n)),
        _ => Err(format!("expected a positive integer or 'auto', got '{s}'")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean HFR per timestep over a manifest, as `t,mean_hfr,n` CSV.
    Hfr(HfrArgs),
    /// Select the timestep with the highest mean HFR.
    Select(SelectArgs),
    /// Split one tensor into high- and low-frequency parts.
    Decompose(DecomposeArgs),
    /// Fisher score per timestep (needs labels; diagnostic only).
    Fisher(FisherArgs),
    /// Pearson and Spearman correlation between two `t,value` series.
    Correlate(CorrelateArgs),
    /// Noise clean tensors with the forward process at each timestep.
    Simulate(SimulateArgs),
    /// Write a synthetic dataset with a known best timestep.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct HfrArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: f64,
    /// Comma list (`1,50,100`) or range `a..b..step`; defaults to every
    /// timestep in the manifest.
    #[arg(long)]
    pub timesteps: Option<String>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, conflicts_with = "curve", required_unless_present = "curve")]
    pub manifest: Option<PathBuf>,
    /// Precomputed curve CSV (`t,mean_hfr,n` or `t,value`).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: f64,
    #[arg(long)]
    pub timesteps: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TIE_EPSILON)]
    pub tie_epsilon: f64,
    /// Recorded in the report; taken from the manifest when one is given.
    #[arg(long)]
    pub total_timesteps: Option<u32>,
    /// Seed the dataset was generated with, recorded in the report.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Schedule the dataset was generated with, recorded in the report.
    #[arg(long, default_value = "linear")]
    pub schedule: String,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DtypeArg {
    F32,
    F64,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Dtype {
        match d {
            DtypeArg::F32 => Dtype::F32,
            DtypeArg::F64 => Dtype::F64,
        }
    }
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    pub cutoff: f64,
    /// Directory receiving `high.npy` and `low.npy`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "f64")]
    pub dtype: DtypeArg,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub timesteps: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// First series, e.g. the HFR curve.
    #[arg(long)]
    pub xs: PathBuf,
    /// Second series, e.g. accuracy per timestep.
    #[arg(long)]
    pub ys: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// `linear` or a path to a `t,alpha` CSV.
    #[arg(long, default_value = "linear")]
    pub schedule: String,
    #[arg(long, default_value_t = DEFAULT_TOTAL_TIMESTEPS)]
    pub total_timesteps: u32,
    /// Feed features labelled `t` with `α_t` (`t`) or `α_{t−1}` (`t-1`).
    #[arg(long, default_value = "t")]
    pub alpha_index: AlphaIndex,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to `1..T..50`.
    #[arg(long)]
    pub timesteps: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Manifest of clean tensors.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long, default_value_t = 16)]
    pub images: usize,
    /// `channels,height,width`.
    #[arg(long, default_value = "4,32,32")]
    pub shape: String,
    /// Timestep with the strongest detail; defaults to `T/4`.
    #[arg(long)]
    pub peak: Option<u32>,
    /// Width of the amplitude bump in timesteps; defaults to `T/10`.
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub base_amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    pub peak_amplitude: f64,
    #[arg(long, default_value_t = 10)]
    pub detail_frequency: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `1,50,100`, `a..b` or `a..b..step`. The stepped form yields `a`
/// followed by every multiple of `step` in `(a, b]`, so `1..1000..50` is
/// `1, 50, 100, …, 1000`.
pub fn parse_timesteps(spec: &str) -> Result<Vec<u32>, String> {
    let spec = spec.trim();
    let num = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| format!("bad timestep '{}' in '{spec}'", s.trim()))
    };
    let mut out = if spec.contains("..") {
        let parts: Vec<&str> = spec.split("..").collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, s] => (num(a)?, num(b)?, num(s)?),
            _ => return Err(format!("bad range '{spec}'")),
        };
        if step == 0 || a > b {
            return Err(format!("bad range '{spec}'"));
        }
        let mut v = vec![a];
        let mut m = (a / step + 1) * step;
        while m <= b {
            v.push(m);
            m += step;
        }
        v
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if out.contains(&0) {
        return Err("timesteps start at 1".into());
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err("empty timestep list".into());
    }
    Ok(out)
}

fn timesteps_arg(spec: &Option<String>) -> CliResult<Option<Vec<u32>>> {
    spec.as_deref()
        .map(parse_timesteps)
        .transpose()
        .map_err(CliError::Usage)
}

fn check_cutoff(c: f64) -> CliResult<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--cutoff must be > 0, got {c}")))
    }
}

fn load_schedule(args: &ScheduleArgs) -> CliResult<NoiseSchedule> {
    if args.schedule == "linear" {
        if args.total_timesteps == 0 {
            return Err(CliError::Usage("--total-timesteps must be >= 1".into()));
        }
        Ok(linear_schedule(args.total_timesteps)?)
    } else {
        Ok(NoiseSchedule::from_csv(&args.schedule)?)
    }
}

fn schedule_grid(args: &ScheduleArgs, schedule: &NoiseSchedule) -> CliResult<Vec<u32>> {
    let t_max = schedule.total_timesteps();
    let grid = match timesteps_arg(&args.timesteps)? {
        Some(g) => g,
        None => parse_timesteps(&format!("1..{t_max}..50")).map_err(CliError::Usage)?,
    };
    if let Some(&t) = grid.iter().find(|&&t| t > t_max) {
        return Err(CliError::Usage(format!("timestep {t} exceeds T = {t_max}")));
    }
    Ok(grid)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn run_hfr(a: &HfrArgs) -> CliResult<()> {
    check_cutoff(a.cutoff)?;
    let grid = timesteps_arg(&a.timesteps)?;
    let manifest = load_manifest(&a.manifest)?;
    let curve = average_hfr(&manifest, a.cutoff, grid.as_deref())?;
    emit(a.out.as_deref(), &curve.to_csv())
}

fn run_select(a: &SelectArgs) -> CliResult<()> {
    check_cutoff(a.cutoff)?;
    let grid = timesteps_arg(&a.timesteps)?;
    let mut config = Map::new();
    config.insert("command".into(), "select".into());
    let (curve, total) = if let Some(m) = &a.manifest {
        let manifest = load_manifest(m)?;
        config.insert("manifest".into(), path_str(m).into());
        let curve = average_hfr(&manifest, a.cutoff, grid.as_deref())?;
        (curve, a.total_timesteps.unwrap_or(manifest.total_timesteps))
    } else {
        let path = a.curve.as_ref().expect("clap enforces --manifest or --curve");
        config.insert("curve".into(), path_str(path).into());
        let mut curve = HfrCurve::read_csv(path, a.cutoff)?;
        if let Some(g) = &grid {
            let pts: Vec<(u32, f64, usize)> = curve
                .points()
                .into_iter()
                .filter(|p| g.contains(&p.t))
                .map(|p| (p.t, p.mean_hfr, p.n))
                .collect();
            curve = HfrCurve::new(&pts, a.cutoff)?;
        }
        (curve, a.total_timesteps.unwrap_or(DEFAULT_TOTAL_TIMESTEPS))
    };
    let mut report = select_timestep(&curve, a.tie_epsilon)?;
    config.insert("cutoff".into(), a.cutoff.into());
    config.insert("total_timesteps".into(), total.into());
    config.insert("timesteps".into(), json!(curve.timesteps()));
    config.insert("tie_epsilon".into(), a.tie_epsilon.into());
    config.insert("seed".into(), a.seed.into());
    config.insert("schedule".into(), a.schedule.clone().into());
    report.config = config;
    emit(a.out.as_deref(), &report.to_json())?;
    eprintln!(
        "selected t={} (mean HFR {}, {} within tie epsilon)",
        report.selected_t,
        report.max_mean_hfr,
        report.ties.len()
    );
    Ok(())
}

fn run_decompose(a: &DecomposeArgs) -> CliResult<()> {
    check_cutoff(a.cutoff)?;
    let map = read_tensor(&a.input)?;
    let mask = gaussian_highpass_mask(map.height(), map.width(), a.cutoff)?;
    let parts = decompose(&map, &mask)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::IoFailure {
        path: a.out.clone(),
        source: e,
    })?;
    write_tensor(&parts.high, a.out.join("high.npy"), a.dtype.into())?;
    write_tensor(&parts.low, a.out.join("low.npy"), a.dtype.into())?;
    Ok(())
}

fn run_fisher(a: &FisherArgs) -> CliResult<()> {
    let grid = timesteps_arg(&a.timesteps)?;
    let manifest = load_manifest(&a.manifest)?;
    let ts = grid.unwrap_or_else(|| manifest.timesteps());
    if ts.is_empty() {
        return Err(Error::EmptyTimestep("manifest has no entries".into()).into());
    }
    let mut results = Vec::new();
    for &t in &ts {
        let entries: Vec<&ManifestEntry> = manifest.entries_at(t).collect();
        if entries.is_empty() {
            return Err(Error::EmptyTimestep(format!("timestep {t} has no manifest entries")).into());
        }
        let mut labels = Vec::with_capacity(entries.len());
        for e in &entries {
            labels.push(e.label.ok_or_else(|| {
                Error::ManifestSchemaError(format!("{}: fisher needs a label on every entry", e.path))
            })?);
        }
        let pooled = entries
            .par_iter()
            .map(|e| load_entry(e).map(|m| pool_map(&m)))
            .collect::<crate::Result<Vec<_>>>()?;
        let set = LabeledEmbeddingSet::from_rows(&pooled, labels)?;
        let r = fisher_score(&set)?;
        results.push(json!({
            "t": t,
            "n": set.len(),
            "classes": set.class_count(),
            "trace_between": r.trace_between,
            "trace_within": r.trace_within,
            "score": r.score,
        }));
    }
    let report = json!({
        "diagnostic_only": true,
        "results": results,
        "config": {
            "command": "fisher",
            "manifest": path_str(&a.manifest),
            "timesteps": ts,
            "pooling": "mean",
        },
    });
    emit(a.out.as_deref(), &to_json(&report))?;
    eprintln!("fisher score needs ground-truth labels; reported as a diagnostic only");
    Ok(())
}

fn run_correlate(a: &CorrelateArgs) -> CliResult<()> {
    let xs = read_series(&a.xs)?;
    let ys = read_series(&a.ys)?;
    let (ts, x, y) = align_series(&xs, &ys)?;
    let c = correlate(&x, &y)?;
    let report = json!({
        "n": ts.len(),
        "pearson": c.pearson,
        "spearman": c.spearman,
        "timesteps": ts,
        "config": {
            "command": "correlate",
            "xs": path_str(&a.xs),
            "ys": path_str(&a.ys),
            "ties": "average",
        },
    });
    emit(a.out.as_deref(), &to_json(&report))?;
    eprintln!("pearson={} spearman={}", c.pearson, c.spearman);
    Ok(())
}

fn schedule_config(args: &ScheduleArgs, schedule: &NoiseSchedule, grid: &[u32]) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schedule".into(), schedule.id().into());
    m.insert("total_timesteps".into(), schedule.total_timesteps().into());
    m.insert("alpha_index".into(), args.alpha_index.to_string().into());
    m.insert("seed".into(), args.seed.into());
    m.insert("timesteps".into(), json!(grid));
    m
}

fn run_simulate(a: &SimulateArgs) -> CliResult<()> {
    let schedule = load_schedule(&a.schedule)?;
    let grid = schedule_grid(&a.schedule, &schedule)?;
    let input = load_manifest(&a.manifest)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;

    let jobs: Vec<(usize, u32)> = (0..input.entries.len())
        .flat_map(|i| grid.iter().map(move |&t| (i, t)))
        .collect();
    let seed = a.schedule.seed;
    let index = a.schedule.alpha_index;
    let entries = jobs
        .par_iter()
        .map(|&(i, t)| {
            let src = &input.entries[i];
            let z0 = load_entry(src)?;
            let eps = sample_noise_keyed(z0.shape(), seed, i as u64, t as u64)?;
            let alpha = schedule.alpha_for(t, index)?;
            let zt = forward_noise(&z0, &eps, alpha)?;
            let name = format!("e{i:05}_t{t:04}.npy");
            let resolved = a.out.join(&name);
            write_tensor(&zt, &resolved, src.meta.dtype)?;
            let meta = FeatureMeta {
                timestep: t,
                ..src.meta.clone()
            };
            let mut entry = ManifestEntry::planned(name, resolved, meta, src.shape);
            entry.label = src.label;
            Ok(entry)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        total_timesteps: schedule.total_timesteps(),
        allow_ragged: input.allow_ragged,
        entries,
    };
    let mut config = schedule_config(&a.schedule, &schedule, &grid);
    config.insert("command".into(), "simulate".into());
    config.insert("manifest".into(), path_str(&a.manifest).into());
    write_atomic(&a.out.join("run.json"), to_json(&json!({ "config": config })).as_bytes())?;
    manifest.write(a.out.join("manifest.json"))?;
    eprintln!("wrote {} noised tensors", manifest.entries.len());
    Ok(())
}

fn parse_shape(s: &str) -> CliResult<(usize, usize, usize)> {
    let dims: Vec<usize> = s
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad --shape '{s}'")))?;
    match dims.as_slice() {
        [c, h, w] if *c > 0 && *h > 0 && *w > 0 => Ok((*c, *h, *w)),
        _ => Err(CliError::Usage(format!("--shape needs three positive dims, got '{s}'"))),
    }
}

fn run_oracle(a: &OracleArgs) -> CliResult<()> {
    let schedule = load_schedule(&a.schedule)?;
    let grid = schedule_grid(&a.schedule, &schedule)?;
    let shape = parse_shape(&a.shape)?;
    let t_max = schedule.total_timesteps();
    let peak = a.peak.unwrap_or((t_max / 4).max(1));
    let width = a.width.unwrap_or((t_max as f64 / 10.0).max(1.0));
    let profile = OracleProfile::unimodal(
        t_max,
        peak,
        width,
        a.base_amplitude,
        a.peak_amplitude,
        a.detail_frequency,
    )?;
    let cfg = OracleConfig {
        n_images: a.images,
        shape,
        seed: a.schedule.seed,
        timesteps: grid.clone(),
        alpha_index: a.schedule.alpha_index,
        dtype: Dtype::F64,
    };
    let manifest = oracle_features(&profile, &schedule, &cfg, &a.out)?;
    let mut config = schedule_config(&a.schedule, &schedule, &grid);
    config.insert("command".into(), "oracle".into());
    config.insert("images".into(), a.images.into());
    config.insert("shape".into(), json!([shape.0, shape.1, shape.2]));
    config.insert("peak".into(), peak.into());
    config.insert("width".into(), width.into());
    config.insert("base_amplitude".into(), a.base_amplitude.into());
    config.insert("peak_amplitude".into(), a.peak_amplitude.into());
    config.insert("detail_frequency".into(), a.detail_frequency.into());
    write_atomic(&a.out.join("run.json"), to_json(&json!({ "config": config })).as_bytes())?;
    eprintln!("wrote {} oracle tensors (peak t={peak})", manifest.entries.len());
    Ok(())
}

/// Run a parsed command on the current thread pool.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Hfr(a) => run_hfr(a),
        Command::Select(a) => run_select(a),
        Command::Decompose(a) => run_decompose(a),
        Command::Fisher(a) => run_fisher(a),
        Command::Correlate(a) => run_correlate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Oracle(a) => run_oracle(a),
    }
}

/// Parse arguments, run, print diagnostics, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match cli.threads {
        Threads::Auto => 0,
        Threads::Count(n) => n,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 2;
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
