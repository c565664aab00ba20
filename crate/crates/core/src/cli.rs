//! Command-line front end: `generate`, `train`, `predict`, `evaluate` and `size-study`.
//!
//! Each command reads an optional JSON config (`--config`), applies flag overrides, runs,
//! and writes `<out>.manifest.json` next to its output. A manifest is itself accepted by
//! `--config`, which replays the run.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{generate_synthetic_well, MeterType, SplitKind, SyntheticWellConfig, WellDataset, DEFAULT_WINDOW_DAYS};
use crate::error::{Result, VfmError};
use crate::evaluation::{
    aggregate_relative_mape, default_calibration_levels, default_thresholds, mape, size_study_split,
    EvaluationReport, RelativeMapeSummary, WellEvaluation, SIZE_STUDY_SIZES, SIZE_STUDY_TEST_POINTS,
};
use crate::inference::{fit_dataset, fit_dataset_with_validation, Checkpoint, FitOptions, FittedParams, Method, NoiseKind};
use crate::predict::{
    point_predictions, save_predictions_csv, PredictiveSampler, DEFAULT_CALIBRATION_SAMPLES, DEFAULT_REPORT_SAMPLES,
};
use crate::stats::derive_seed;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "vfm", version, about = "Bayesian neural-network virtual flow metering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic well data.
    Generate(GenerateArgs),
    /// Fit a model to a well and write a checkpoint.
    Train(TrainArgs),
    /// Write predictive summaries for every record of a dataset.
    Predict(PredictArgs),
    /// Evaluate checkpoints on their held-out windows.
    Evaluate(EvaluateArgs),
    /// Relative test error as a function of training-set size.
    SizeStudy(SizeStudyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file or a manifest from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-well parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Stationary,
    Drifting,
}

impl Preset {
    pub fn config(self) -> SyntheticWellConfig {
        match self {
            Preset::Stationary => SyntheticWellConfig::default(),
            Preset::Drifting => SyntheticWellConfig::drifting(),
        }
    }
}

/// Model and optimizer flags shared by `train` and `size-study`.
#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
    /// Hidden-layer widths, e.g. `50,50,50`.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Instrument MAPE as a fraction.
    #[arg(long)]
    pub er: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

impl FitArgs {
    fn apply(&self, fit: &mut FitOptions) {
        if let Some(m) = self.method {
            fit.method = m;
            // MAP always uses the fixed noise model unless told otherwise.
            if m == Method::Map && self.noise.is_none() {
                fit.noise = NoiseKind::Fixed;
            }
        }
        if let Some(n) = self.noise {
            fit.noise = n;
        }
        if let Some(h) = &self.hidden {
            fit.hidden = h.clone();
        }
        if let Some(er) = self.er {
            fit.er = Some(er);
        }
        if let Some(v) = self.max_epochs {
            fit.train.max_epochs = v;
        }
        if let Some(v) = self.patience {
            fit.train.patience = v;
        }
        if let Some(v) = self.batch_size {
            fit.train.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            fit.train.learning_rate = v;
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub meter: Option<MeterType>,
    #[arg(long)]
    pub records: Option<usize>,
    /// Instrument MAPE as a fraction.
    #[arg(long)]
    pub er: Option<f64>,
    /// Number of wells; more than one writes a directory of `well_NNN.csv` files.
    #[arg(long)]
    pub wells: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub split: Option<SplitKind>,
    #[arg(long)]
    pub window_days: Option<f64>,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Only predict the test window recorded in the checkpoint.
    #[arg(long)]
    pub test_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset files, paired in order with `--checkpoint`.
    #[arg(long)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub checkpoint: Vec<PathBuf>,
    /// Predictive draws per test point for calibration.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SizeStudyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub wells: usize,
    pub well: SyntheticWellConfig,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            out: None,
            seed: 0,
            wells: 1,
            well: SyntheticWellConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainCommandConfig {
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    /// Held-out window; `None` trains on every record.
    pub split: Option<SplitKind>,
    pub window_days: f64,
    pub fit: FitOptions,
}

impl Default for TrainCommandConfig {
    fn default() -> Self {
        TrainCommandConfig {
            out: None,
            data: None,
            split: Some(SplitKind::Historical),
            window_days: DEFAULT_WINDOW_DAYS,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub samples: usize,
    pub seed: u64,
    pub test_only: bool,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            out: None,
            checkpoint: None,
            data: None,
            samples: DEFAULT_REPORT_SAMPLES,
            seed: 0,
            test_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateWell {
    pub name: String,
    pub data: PathBuf,
    pub checkpoint: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    pub out: Option<PathBuf>,
    pub wells: Vec<EvaluateWell>,
    pub samples: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            out: None,
            wells: Vec::new(),
            samples: DEFAULT_CALIBRATION_SAMPLES,
            seed: 0,
            levels: default_calibration_levels(),
            thresholds: default_thresholds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizeStudyConfig {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub sizes: Vec<usize>,
    pub well: SyntheticWellConfig,
    pub fit: FitOptions,
}

impl Default for SizeStudyConfig {
    fn default() -> Self {
        SizeStudyConfig {
            out: None,
            seed: 0,
            trials: 400,
            sizes: SIZE_STUDY_SIZES.to_vec(),
            well: SyntheticWellConfig {
                records: 1200,
                ..SyntheticWellConfig::default()
            },
            fit: FitOptions {
                method: Method::Map,
                noise: NoiseKind::Fixed,
                ..FitOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one command run: enough to replay it byte-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Per-size summary and raw errors of a size study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStudyReport {
    pub sizes: Vec<usize>,
    pub summary: Vec<RelativeMapeSummary>,
    /// Test MAPE `E_k` of every trial, in the order of `sizes`.
    pub errors: Vec<Vec<f64>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| VfmError::io(path, e))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| VfmError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| VfmError::io(path, e))
}

fn write_manifest<C: Serialize>(
    command: &str,
    seed: u64,
    config: &C,
    out: &Path,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let config = serde_json::to_value(config)?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config_sha256: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
        config,
        inputs: inputs.iter().map(|p| file_digest(p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| file_digest(p)).collect::<Result<_>>()?,
    };
    let path = manifest_path(out);
    write_text(&path, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(path)
}

/// Loads a command config from a plain config file or from a manifest written by `command`.
pub fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<C> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| VfmError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| VfmError::Config(format!("{}: {e}", path.display())))?;
    let value = if value.get("manifest_version").is_some() {
        let manifest: Manifest =
            serde_json::from_value(value).map_err(|e| VfmError::Config(format!("{}: {e}", path.display())))?;
        if manifest.command != command {
            return Err(VfmError::Config(format!(
                "manifest {} was written by '{}', not '{command}'",
                path.display(),
                manifest.command
            )));
        }
        manifest.config
    } else {
        value
    };
    serde_json::from_value(value).map_err(|e| VfmError::Config(format!("{}: {e}", path.display())))
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    value.as_ref().ok_or_else(|| VfmError::Config(format!("missing {what}")))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Appends `suffix` to the file stem of `out`: `report.json` -> `report.<suffix>.csv`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_file_name(format!("{}.{suffix}.csv", stem(out)))
}

pub fn cmd_generate(cfg: &GenerateConfig) -> Result<Vec<PathBuf>> {
    let out = required(&cfg.out, "--out")?;
    if cfg.wells == 0 {
        return Err(VfmError::Config("wells must be at least 1".into()));
    }
    cfg.well.validate()?;
    let mut outputs = Vec::new();
    if cfg.wells == 1 {
        let well = generate_synthetic_well(&cfg.well, cfg.seed)?;
        let mut buf = Vec::new();
        well.dataset.to_csv_writer(&mut buf)?;
        write_text(out, &String::from_utf8_lossy(&buf))?;
        outputs.push(out.clone());
    } else {
        std::fs::create_dir_all(out).map_err(|e| VfmError::io(out, e))?;
        let wells = (0..cfg.wells)
            .into_par_iter()
            .map(|i| generate_synthetic_well(&cfg.well, derive_seed(cfg.seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        for (i, well) in wells.iter().enumerate() {
            let path = out.join(format!("well_{i:03}.csv"));
            well.dataset.write_csv(&path)?;
            outputs.push(path);
        }
    }
    write_manifest("generate", cfg.seed, cfg, out, &[], &outputs)?;
    Ok(outputs)
}

/// Training data for a checkpointed split, or the whole dataset without one.
fn train_test(dataset: &WellDataset, split: Option<SplitKind>, window_days: f64) -> Result<(WellDataset, Option<WellDataset>)> {
    match split {
        Some(kind) => {
            let (train, test) = kind.apply(dataset, window_days)?;
            Ok((train, Some(test)))
        }
        None => Ok((dataset.clone(), None)),
    }
}

pub fn cmd_train(cfg: &TrainCommandConfig) -> Result<Checkpoint> {
    let out = required(&cfg.out, "--out")?;
    let data = required(&cfg.data, "--data")?;
    cfg.fit.validate()?;
    let dataset = WellDataset::read_csv(data)?;
    let (train, _) = train_test(&dataset, cfg.split, cfg.window_days)?;
    let mut ckpt = fit_dataset(&train, &cfg.fit)?;
    ckpt.split = cfg.split;
    ckpt.window_days = cfg.split.map(|_| cfg.window_days);
    ckpt.save(out)?;
    write_manifest("train", cfg.fit.train.seed, cfg, out, &[data.clone()], &[out.clone()])?;
    Ok(ckpt)
}

fn test_set(ckpt: &Checkpoint, dataset: &WellDataset) -> Result<WellDataset> {
    match ckpt.split {
        Some(kind) => Ok(kind.apply(dataset, ckpt.window_days.unwrap_or(DEFAULT_WINDOW_DAYS))?.1),
        None => {
            log::warn!("checkpoint records no held-out window; using every record");
            Ok(dataset.clone())
        }
    }
}

pub fn cmd_predict(cfg: &PredictConfig) -> Result<PathBuf> {
    let out = required(&cfg.out, "--out")?;
    let ckpt_path = required(&cfg.checkpoint, "--checkpoint")?;
    let data = required(&cfg.data, "--data")?;
    let ckpt = Checkpoint::load(ckpt_path)?;
    let mut dataset = WellDataset::read_csv(data)?;
    if cfg.test_only {
        dataset = test_set(&ckpt, &dataset)?;
    }
    let sampler = PredictiveSampler::from_checkpoint(&ckpt, cfg.samples, cfg.seed)?;
    let inputs = dataset.features();
    let summaries = sampler.summarize(&inputs, &[])?;
    save_predictions_csv(out, &inputs, &summaries)?;
    write_manifest("predict", cfg.seed, cfg, out, &[ckpt_path.clone(), data.clone()], &[out.clone()])?;
    Ok(out.clone())
}

fn render(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Test-window evaluation of one checkpoint. Variational checkpoints also get calibration.
pub fn evaluate_checkpoint(
    name: &str,
    ckpt: &Checkpoint,
    dataset: &WellDataset,
    samples: usize,
    seed: u64,
    levels: &[f64],
) -> Result<WellEvaluation> {
    let test = test_set(ckpt, dataset)?;
    let meter = test
        .meter()
        .or(ckpt.meter)
        .ok_or_else(|| VfmError::Data(format!("well {name} mixes meter types")))?;
    let y = test.targets();
    let inputs = test.features();
    match ckpt.params {
        FittedParams::Map { .. } => {
            let pred = point_predictions(ckpt, &inputs, seed)?;
            WellEvaluation::point(name, meter, &y, &pred)
        }
        FittedParams::Vi { .. } => {
            let sampler = PredictiveSampler::from_checkpoint(ckpt, samples, seed)?;
            let draws = sampler.draws(&inputs)?;
            let pred: Vec<f64> = draws.iter().map(|d| d.z.iter().sum::<f64>() / d.z.len() as f64).collect();
            WellEvaluation::probabilistic(name, meter, &y, &pred, &draws, levels)
        }
    }
}

pub fn cmd_evaluate(cfg: &EvaluateConfig) -> Result<EvaluationReport> {
    let out = required(&cfg.out, "--out")?;
    if cfg.wells.is_empty() {
        return Err(VfmError::Config("no wells to evaluate; pass --data and --checkpoint".into()));
    }
    let wells = cfg
        .wells
        .par_iter()
        .map(|w| {
            let ckpt = Checkpoint::load(&w.checkpoint)?;
            let dataset = WellDataset::read_csv(&w.data)?;
            evaluate_checkpoint(&w.name, &ckpt, &dataset, cfg.samples, cfg.seed, &cfg.levels)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = EvaluationReport::from_wells(wells, &cfg.thresholds)?;
    write_text(out, &(report.to_json()? + "\n"))?;
    let mut outputs = vec![out.clone()];
    let csvs: [(&str, Vec<u8>); 3] = [
        ("cumulative", render(|b| report.write_cumulative_csv(b))?),
        ("calibration", render(|b| report.write_calibration_csv(b))?),
        ("wells", render(|b| report.write_wells_csv(b))?),
    ];
    for (suffix, bytes) in csvs {
        let path = sibling(out, suffix);
        write_text(&path, &String::from_utf8_lossy(&bytes))?;
        outputs.push(path);
    }
    let inputs: Vec<PathBuf> = cfg.wells.iter().flat_map(|w| [w.data.clone(), w.checkpoint.clone()]).collect();
    write_manifest("evaluate", cfg.seed, cfg, out, &inputs, &outputs)?;
    Ok(report)
}

/// Test MAPE at each training size for one well.
pub fn size_study_trial(dataset: &WellDataset, sizes: &[usize], fit: &FitOptions, seed: u64) -> Result<Vec<f64>> {
    sizes
        .iter()
        .map(|&k| {
            let split = size_study_split(dataset, k)?;
            let mut opts = fit.clone();
            opts.train.seed = derive_seed(seed, k as u64);
            let ckpt = fit_dataset_with_validation(&split.fit, &split.validation, &opts)?;
            let pred = point_predictions(&ckpt, &split.test.features(), seed)?;
            mape(&split.test.targets(), &pred)
        })
        .collect()
}

pub fn run_size_study(cfg: &SizeStudyConfig) -> Result<SizeStudyReport> {
    if cfg.trials == 0 {
        return Err(VfmError::Config("size study needs at least one trial".into()));
    }
    if !cfg.sizes.contains(&SIZE_STUDY_SIZES[0]) {
        return Err(VfmError::Config(format!("sizes must include the baseline {}", SIZE_STUDY_SIZES[0])));
    }
    let largest = cfg.sizes.iter().copied().max().unwrap_or(0);
    if cfg.well.records < largest + SIZE_STUDY_TEST_POINTS {
        return Err(VfmError::Config(format!(
            "wells need at least {} records for training size {largest}",
            largest + SIZE_STUDY_TEST_POINTS
        )));
    }
    cfg.fit.validate()?;
    let errors = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(cfg.seed, t as u64);
            let well = generate_synthetic_well(&cfg.well, seed)?;
            size_study_trial(&well.dataset, &cfg.sizes, &cfg.fit, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<Vec<(usize, f64)>> = errors
        .iter()
        .map(|e| cfg.sizes.iter().copied().zip(e.iter().copied()).collect())
        .collect();
    Ok(SizeStudyReport {
        sizes: cfg.sizes.clone(),
        summary: aggregate_relative_mape(&series)?,
        errors,
    })
}

pub fn cmd_size_study(cfg: &SizeStudyConfig) -> Result<SizeStudyReport> {
    let out = required(&cfg.out, "--out")?;
    let report = run_size_study(cfg)?;
    write_text(out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["size", "median", "p25", "p75", "trials"])?;
    for s in &report.summary {
        wtr.write_record([
            s.size.to_string(),
            s.median.to_string(),
            s.p25.to_string(),
            s.p75.to_string(),
            s.trials.to_string(),
        ])?;
    }
    let csv_path = sibling(out, "relative_mape");
    let bytes = wtr.into_inner().map_err(|e| VfmError::Data(e.to_string()))?;
    write_text(&csv_path, &String::from_utf8_lossy(&bytes))?;
    write_manifest("size-study", cfg.seed, cfg, out, &[], &[out.clone(), csv_path])?;
    Ok(report)
}

fn with_jobs<T>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| VfmError::Config(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let mut cfg: GenerateConfig = load_config(a.common.config.as_deref(), "generate")?;
            if let Some(p) = a.preset {
                cfg.well = SyntheticWellConfig {
                    meter: cfg.well.meter,
                    records: cfg.well.records,
                    er: cfg.well.er,
                    ..p.config()
                };
            }
            if let Some(m) = a.meter {
                cfg.well.meter = m;
            }
            if let Some(r) = a.records {
                cfg.well.records = r;
            }
            if let Some(er) = a.er {
                cfg.well.er = Some(er);
            }
            if let Some(w) = a.wells {
                cfg.wells = w;
            }
            apply_common(&a.common, &mut cfg.out, &mut cfg.seed);
            with_jobs(a.common.jobs, || cmd_generate(&cfg)).map(|_| ())
        }
        Command::Train(a) => {
            let mut cfg: TrainCommandConfig = load_config(a.common.config.as_deref(), "train")?;
            if a.data.is_some() {
                cfg.data = a.data;
            }
            if a.split.is_some() {
                cfg.split = a.split;
            }
            if let Some(w) = a.window_days {
                cfg.window_days = w;
            }
            a.fit.apply(&mut cfg.fit);
            apply_common(&a.common, &mut cfg.out, &mut cfg.fit.train.seed);
            cmd_train(&cfg).map(|_| ())
        }
        Command::Predict(a) => {
            let mut cfg: PredictConfig = load_config(a.common.config.as_deref(), "predict")?;
            if a.checkpoint.is_some() {
                cfg.checkpoint = a.checkpoint;
            }
            if a.data.is_some() {
                cfg.data = a.data;
            }
            if let Some(s) = a.samples {
                cfg.samples = s;
            }
            cfg.test_only |= a.test_only;
            apply_common(&a.common, &mut cfg.out, &mut cfg.seed);
            cmd_predict(&cfg).map(|_| ())
        }
        Command::Evaluate(a) => {
            let mut cfg: EvaluateConfig = load_config(a.common.config.as_deref(), "evaluate")?;
            if !a.data.is_empty() || !a.checkpoint.is_empty() {
                if a.data.len() != a.checkpoint.len() {
                    return Err(VfmError::Config(format!(
                        "{} --data files but {} --checkpoint files",
                        a.data.len(),
                        a.checkpoint.len()
                    )));
                }
                cfg.wells = a
                    .data
                    .iter()
                    .zip(&a.checkpoint)
                    .map(|(d, c)| EvaluateWell {
                        name: stem(d),
                        data: d.clone(),
                        checkpoint: c.clone(),
                    })
                    .collect();
            }
            if let Some(s) = a.samples {
                cfg.samples = s;
            }
            apply_common(&a.common, &mut cfg.out, &mut cfg.seed);
            with_jobs(a.common.jobs, || cmd_evaluate(&cfg)).map(|_| ())
        }
        Command::SizeStudy(a) => {
            let mut cfg: SizeStudyConfig = load_config(a.common.config.as_deref(), "size-study")?;
            if let Some(p) = a.preset {
                cfg.well = SyntheticWellConfig {
                    records: cfg.well.records,
                    meter: cfg.well.meter,
                    er: cfg.well.er,
                    ..p.config()
                };
            }
            if let Some(t) = a.trials {
                cfg.trials = t;
            }
            a.fit.apply(&mut cfg.fit);
            apply_common(&a.common, &mut cfg.out, &mut cfg.seed);
            with_jobs(a.common.jobs, || cmd_size_study(&cfg)).map(|_| ())
        }
    }
}

fn apply_common(common: &CommonArgs, out: &mut Option<PathBuf>, seed: &mut u64) {
    if common.out.is_some() {
        *out = common.out.clone();
    }
    if let Some(s) = common.seed {
        *seed = s;
    }
}

/// Process exit code for an error: 2 for configuration, 3 for numerical failure, 1 otherwise.
pub fn exit_code(err: &VfmError) -> i32 {
    if err.is_config() {
        2
    } else if err.is_numerical() {
        3
    } else {
        1
    }
}

/// Single-line JSON rendering of an error.
pub fn error_json(err: &VfmError) -> String {
    let kind = if err.is_config() {
        "config"
    } else if err.is_numerical() {
        "numerical"
    } else {
        match err {
            VfmError::Io { .. } => "io",
            _ => "data",
        }
    };
    serde_json::json!({ "error": kind, "message": err.to_string() }).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", serde_json::json!({ "error": "config", "message": first }));
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
