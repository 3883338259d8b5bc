//! Library backing the `brl` binary: train / eval / matrix / export
//! commands with deterministic seed derivation and stable file outputs.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

use brl_core::checkpoint::{Checkpoint, CheckpointError};
use brl_core::config::{load_config, AgentConfig, ConfigError};
use brl_core::evalkit::{
    self, steps_csv, EpisodeRecord, EvalError, MetricSummary, SummaryExport, DEFAULT_THRESHOLD,
};
use brl_core::harness::{evaluate, EvalOptions, HarnessError, TrainSetup, Trainer};
use brl_core::perception::NoiseConfig;
use brl_core::simworld::Scenario;

/// Corruption level of the "estimated segmentation" arm of the matrix.
pub const MATRIX_NOISE_FLIP: f64 = 0.05;
pub const MATRIX_NOISE_BLOBS: f64 = 2.0;
/// Reduced step budget used by `--quick`.
pub const QUICK_T_MAX: u32 = 200;
/// Offset separating evaluation seeds from training seeds.
const EVAL_SEED_OFFSET: u64 = 1_000_003;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 1 usage, 2 config, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::NoEpisodes | HarnessError::NoScenarios => CliError::Usage(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Read { .. } | CheckpointError::Write { .. } => {
                CliError::Io(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Scenario selection from the `--scenario` flag.
pub fn scenario_set(flag: &str) -> Result<Vec<Scenario>, CliError> {
    if flag == "all" {
        return Ok(Scenario::ALL.to_vec());
    }
    flag.parse::<Scenario>()
        .map(|s| vec![s])
        .map_err(CliError::Usage)
}

/// Builds the optional noise config from the two CLI floats.
pub fn noise_from_flags(flip: f64, blobs: f64) -> Result<Option<NoiseConfig>, CliError> {
    if flip == 0.0 && blobs == 0.0 {
        return Ok(None);
    }
    NoiseConfig::new(flip, blobs, 9)
        .map(Some)
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn load_config_file(path: Option<&Path>) -> Result<AgentConfig, CliError> {
    match path {
        None => Ok(AgentConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Ok(load_config(&text)?)
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub noise: Option<NoiseConfig>,
    pub scenarios: Vec<Scenario>,
    pub out: PathBuf,
    pub quick: bool,
}

#[derive(Debug)]
pub struct TrainOutput {
    pub checkpoint_path: PathBuf,
    pub log_csv_path: PathBuf,
    pub steps: u64,
    pub n_components: usize,
    pub mean_reward: f64,
}

/// Trains one model and writes `checkpoint.json` plus the per-step
/// training log `train_log.csv` (reward and TD error per decision).
pub fn run_train(args: &TrainArgs) -> Result<TrainOutput, CliError> {
    let mut cfg = load_config_file(args.config.as_deref())?;
    if args.quick {
        cfg.t_max = cfg.t_max.min(QUICK_T_MAX);
    }
    let setup = TrainSetup::new(args.seed)
        .with_noise(args.noise)
        .with_scenarios(args.scenarios.clone());
    let mut trainer = Trainer::new(cfg, setup)?;
    trainer.run_to_completion()?;

    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let checkpoint_path = args.out.join("checkpoint.json");
    trainer.checkpoint().save(&checkpoint_path)?;
    let log_csv_path = args.out.join("train_log.csv");
    write_text(&log_csv_path, &steps_csv(trainer.log()))?;

    let mean_reward = if trainer.log().is_empty() {
        0.0
    } else {
        trainer.log().iter().map(|r| r.reward).sum::<f64>() / trainer.log().len() as f64
    };
    Ok(TrainOutput {
        checkpoint_path,
        log_csv_path,
        steps: trainer.step_count(),
        n_components: trainer.agent().n_components(),
        mean_reward,
    })
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub episodes: usize,
    pub seed: u64,
    pub noise: Option<NoiseConfig>,
    pub scenarios: Vec<Scenario>,
    pub out: PathBuf,
}

#[derive(Debug)]
pub struct EvalOutput {
    pub summary: SummaryExport,
    pub records_path: PathBuf,
    pub steps_csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Greedy deployment of a checkpointed model; writes `records.json`,
/// `steps.csv` and `summary.json`.
pub fn run_eval(args: &EvalArgs) -> Result<EvalOutput, CliError> {
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be positive".into()));
    }
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let agent = checkpoint.agent();
    let opts = EvalOptions {
        scenarios: args.scenarios.clone(),
        noise: args.noise,
        episodes: args.episodes,
        seed: args.seed,
    };
    let records = evaluate(
        &agent,
        &checkpoint.config.reward,
        &checkpoint.setup.tracks,
        &checkpoint.setup.camera,
        &opts,
    )?;
    let summary = SummaryExport::from_records(&records, DEFAULT_THRESHOLD)?;

    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let records_path = args.out.join("records.json");
    let json = serde_json::to_string_pretty(&records).expect("records serialize");
    write_text(&records_path, &json)?;
    let paths = evalkit::export(&records, &summary, &args.out)?;
    Ok(EvalOutput {
        summary,
        records_path,
        steps_csv_path: paths.steps_csv,
        summary_path: paths.summary_json,
    })
}

#[derive(Debug, Clone)]
pub struct MatrixArgs {
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub models: usize,
    pub episodes: usize,
    pub noise: NoiseConfig,
    pub out: PathBuf,
    pub quick: bool,
}

/// One evaluated model: the seven summary metrics plus its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub offroad: f64,
    pub otherlane: f64,
    pub either: f64,
    pub success: f64,
    pub no_collision: f64,
    pub score: f64,
    pub dist: f64,
}

impl ModelRow {
    fn new(model: String, s: &MetricSummary) -> Self {
        Self {
            model,
            offroad: s.offroad,
            otherlane: s.otherlane,
            either: s.either,
            success: s.success,
            no_collision: s.no_collision,
            score: s.score,
            dist: s.dist,
        }
    }
}

/// Aggregates over one train/deploy cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub rows: Vec<ModelRow>,
    pub mean_score: f64,
    pub std_score: f64,
    pub mean_dist: f64,
    pub std_dist: f64,
    pub best: ModelRow,
}

impl CellSummary {
    fn from_rows(rows: Vec<ModelRow>) -> Self {
        let n = rows.len() as f64;
        let mean_score = rows.iter().map(|r| r.score).sum::<f64>() / n;
        let mean_dist = rows.iter().map(|r| r.dist).sum::<f64>() / n;
        // Sample standard deviation, matching how model-set spread is
        // usually reported.
        let var = |mean: f64, values: Vec<f64>| -> f64 {
            if values.len() < 2 {
                return 0.0;
            }
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
        };
        let std_score = var(mean_score, rows.iter().map(|r| r.score).collect()).sqrt();
        let std_dist = var(mean_dist, rows.iter().map(|r| r.dist).collect()).sqrt();
        let best = rows
            .iter()
            .max_by(|a, b| a.score.partial_cmp(&b.score).expect("finite scores"))
            .expect("non-empty cell")
            .clone();
        Self {
            rows,
            mean_score,
            std_score,
            mean_dist,
            std_dist,
            best,
        }
    }
}

/// Full 2x2 experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub models_per_set: usize,
    pub eval_episodes: usize,
    pub noise: NoiseConfig,
    pub tgdg: CellSummary,
    pub tgde: CellSummary,
    pub tedg: CellSummary,
    pub tede: CellSummary,
}

impl MatrixReport {
    /// Fixed-order CSV of every model row, for spreadsheet diffing.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "cell,model,offroad,otherlane,either,success,no_collision,score,dist\n",
        );
        for (cell, summary) in [
            ("TGDG", &self.tgdg),
            ("TGDE", &self.tgde),
            ("TEDG", &self.tedg),
            ("TEDE", &self.tede),
        ] {
            for r in &summary.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    cell,
                    r.model,
                    r.offroad,
                    r.otherlane,
                    r.either,
                    r.success,
                    r.no_collision,
                    r.score,
                    r.dist
                ));
            }
        }
        out
    }
}

/// Seed of the i-th trained model.
pub fn model_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add(index as u64)
}

/// Seed of the i-th model's evaluations. DG and DE share it, so the two
/// deployments see identical tracks and policy draws and differ only in
/// the noise stream.
pub fn eval_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add(EVAL_SEED_OFFSET).wrapping_add(index as u64)
}

/// Trains `models` seeds with ground-truth and with estimated (corrupted)
/// input, deploys every model under both input types, and writes the
/// per-cell report (`matrix.json`, `matrix.csv`).
pub fn run_matrix(args: &MatrixArgs) -> Result<MatrixReport, CliError> {
    if args.models < 2 {
        return Err(CliError::Usage(
            "--models must be at least 2 for mean/std aggregation".into(),
        ));
    }
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be positive".into()));
    }
    let mut cfg = load_config_file(args.config.as_deref())?;
    if args.quick {
        cfg.t_max = cfg.t_max.min(QUICK_T_MAX);
    }

    let mut cells: [Vec<ModelRow>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for index in 0..args.models {
        let seed = model_seed(args.seed, index);
        for (train_noisy, tag) in [(false, "TG"), (true, "TE")] {
            let noise = train_noisy.then_some(args.noise);
            let setup = TrainSetup::new(seed).with_noise(noise);
            let mut trainer = Trainer::new(cfg.clone(), setup)?;
            trainer.run_to_completion()?;
            let agent = trainer.agent().clone();
            let out_dir = args.out.join(format!("{}_{index}", tag.to_lowercase()));
            std::fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;
            trainer
                .checkpoint()
                .save(&out_dir.join("checkpoint.json"))?;

            for deploy_noisy in [false, true] {
                let opts = EvalOptions {
                    scenarios: Scenario::ALL.to_vec(),
                    noise: deploy_noisy.then_some(args.noise),
                    episodes: args.episodes,
                    seed: eval_seed(args.seed, index),
                };
                let records = evaluate(
                    &agent,
                    &trainer.config().reward,
                    &trainer.setup().tracks,
                    &trainer.setup().camera,
                    &opts,
                )?;
                let summary = evalkit::summarize(&records, DEFAULT_THRESHOLD)?;
                let row = ModelRow::new(format!("{tag}-seed{seed}"), &summary);
                let cell = match (train_noisy, deploy_noisy) {
                    (false, false) => 0, // TGDG
                    (false, true) => 1,  // TGDE
                    (true, false) => 2,  // TEDG
                    (true, true) => 3,   // TEDE
                };
                cells[cell].push(row);
            }
        }
    }

    let [tgdg, tgde, tedg, tede] = cells;
    let report = MatrixReport {
        models_per_set: args.models,
        eval_episodes: args.episodes,
        noise: args.noise,
        tgdg: CellSummary::from_rows(tgdg),
        tgde: CellSummary::from_rows(tgde),
        tedg: CellSummary::from_rows(tedg),
        tede: CellSummary::from_rows(tede),
    };

    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(&args.out.join("matrix.json"), &json)?;
    write_text(&args.out.join("matrix.csv"), &report.to_csv())?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ExportArgs {
    pub records: PathBuf,
    pub out: PathBuf,
}

/// Re-exports a saved `records.json` as `steps.csv` + `summary.json`.
pub fn run_export(args: &ExportArgs) -> Result<SummaryExport, CliError> {
    let text = std::fs::read_to_string(&args.records).map_err(|e| io_err(&args.records, e))?;
    let records: Vec<EpisodeRecord> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.records.display())))?;
    let summary = SummaryExport::from_records(&records, DEFAULT_THRESHOLD)?;
    evalkit::export(&records, &summary, &args.out)?;
    Ok(summary)
}
