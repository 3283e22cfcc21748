//! Grid sweeps: expand a [`RunConfig`] into cells, evaluate them in a
//! worker pool and write the result files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{strategy_label, RunConfig};
use crate::data::{validate_frame, LongFrame};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::report::{self, ReportCell};
use crate::strategies::{Forecast, Mode, StrategySpec};
use crate::transforms::PipelineConfig;
use crate::validation::{backtest, evaluate_holdout, BacktestReport, Experiment, FoldReport, HoldoutResult};

/// One point of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    pub model_label: String,
    pub model: ModelSpec,
    pub strategy: StrategySpec,
    pub mode: Mode,
    pub preprocessing: String,
    pub datetime_features: bool,
    pub id_features: bool,
    /// The error message when the pipeline could not be assembled.
    pub pipeline: std::result::Result<PipelineConfig, String>,
}

impl Cell {
    pub fn strategy_label(&self) -> String {
        strategy_label(&self.strategy)
    }
}

/// Cartesian product strategies x modes x preprocessings x datetime flags x
/// id flags x models, in that nesting order. Cell ids are zero-padded grid
/// positions.
pub fn expand_grid(cfg: &RunConfig) -> Result<Vec<Cell>> {
    let strategies = cfg.strategy_specs()?;
    let labels = cfg.model_labels();
    let total = strategies.len()
        * cfg.modes.len()
        * cfg.preprocessings.len()
        * cfg.features.datetime.len()
        * cfg.features.id.len()
        * cfg.models.len();
    let width = total.to_string().len().max(3);
    let mut cells = Vec::with_capacity(total);
    for strategy in &strategies {
        for &mode in &cfg.modes {
            for pre in &cfg.preprocessings {
                for &dt in &cfg.features.datetime {
                    for &id in &cfg.features.id {
                        for (model, label) in cfg.models.iter().zip(&labels) {
                            cells.push(Cell {
                                id: format!("{:0width$}", cells.len()),
                                model_label: label.clone(),
                                model: model.with_seed(cfg.seed),
                                strategy: *strategy,
                                mode,
                                preprocessing: pre.name.clone(),
                                datetime_features: dt,
                                id_features: id,
                                pipeline: cfg.pipeline(pre, dt, id).map_err(|e| e.to_string()),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone)]
pub enum CellOutcome<T> {
    Completed(T),
    /// `reason` is the machine-readable error code.
    Skipped { reason: String, message: String },
}

#[derive(Debug, Clone)]
pub struct CellResult<T> {
    pub cell: Cell,
    pub outcome: CellOutcome<T>,
    pub wall_ms: f64,
}

impl<T> CellResult<T> {
    pub fn completed(&self) -> Option<&T> {
        match &self.outcome {
            CellOutcome::Completed(t) => Some(t),
            CellOutcome::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    /// Run only these cell ids.
    pub only: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    pub config_hash: String,
    pub seed: u64,
    pub cells: Vec<CellResult<T>>,
    pub wall_ms: f64,
}

impl<T> SweepResult<T> {
    pub fn n_completed(&self) -> usize {
        self.cells.iter().filter(|c| c.completed().is_some()).count()
    }
}

pub type HoldoutSweep = SweepResult<HoldoutResult>;
pub type BacktestSweep = SweepResult<BacktestReport>;

fn run_cells<T: Send>(
    cfg: &RunConfig,
    frame: &LongFrame,
    opts: &SweepOptions,
    eval: impl Fn(&LongFrame, &Experiment<'_>) -> Result<T> + Sync,
) -> Result<SweepResult<T>> {
    validate_frame(frame).ensure_clean()?;
    let mut cells = expand_grid(cfg)?;
    if let Some(only) = &opts.only {
        if let Some(missing) = only.iter().find(|id| !cells.iter().any(|c| &c.id == *id)) {
            return Err(Error::Constraint(format!("no cell with id `{missing}`")));
        }
        cells.retain(|c| only.contains(&c.id));
    }
    let started = Instant::now();
    let run_one = |cell: Cell| {
        let t0 = Instant::now();
        let result = match &cell.pipeline {
            Ok(pipeline) => {
                let exp = Experiment {
                    pipeline,
                    strategy: cell.strategy,
                    mode: cell.mode,
                    learner: &cell.model,
                };
                eval(frame, &exp)
            }
            Err(msg) => Err(Error::InvalidPipeline(msg.clone())),
        };
        let outcome = match result {
            Ok(r) => CellOutcome::Completed(r),
            Err(e) => {
                log::warn!("cell {} skipped: {e}", cell.id);
                CellOutcome::Skipped {
                    reason: e.code().to_string(),
                    message: e.to_string(),
                }
            }
        };
        CellResult {
            cell,
            outcome,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Constraint(format!("cannot start worker pool: {e}")))?;
    let results: Vec<CellResult<T>> = pool.install(|| cells.into_par_iter().map(run_one).collect());
    let out = SweepResult {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        cells: results,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    if out.n_completed() == 0 {
        return Err(Error::NoRunnableCells);
    }
    Ok(out)
}

/// Evaluates every cell on a final holdout of `H` points per series, with
/// cross-validated fold ensembles fitted on the rest.
pub fn run_sweep(cfg: &RunConfig, frame: &LongFrame, opts: &SweepOptions) -> Result<HoldoutSweep> {
    let cv = cfg.validation.cv()?;
    run_cells(cfg, frame, opts, |f, exp| evaluate_holdout(f, exp, &cv))
}

/// Rolling-origin backtest of every cell.
pub fn run_backtest(cfg: &RunConfig, frame: &LongFrame, opts: &SweepOptions) -> Result<BacktestSweep> {
    let cv = cfg.validation.cv()?;
    let windows = cfg.validation.backtest.map_or(1, |b| b.windows);
    let stride = cfg.backtest_stride();
    run_cells(cfg, frame, opts, |f, exp| backtest(f, exp, &cv, windows, stride))
}

/// Header of `metrics.csv`.
pub const METRICS_COLUMNS: [&str; 12] = [
    "cell_id",
    "model",
    "strategy",
    "MH",
    "mode",
    "preprocessing",
    "datetime_features",
    "id_features",
    "fold",
    "split",
    "MAE",
    "MSE",
];

fn cell_fields(c: &Cell) -> Vec<String> {
    vec![
        c.id.clone(),
        c.model_label.clone(),
        c.strategy_label(),
        c.strategy.model_horizon.to_string(),
        c.mode.name().to_string(),
        c.preprocessing.clone(),
        c.datetime_features.to_string(),
        c.id_features.to_string(),
    ]
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidData(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// One val row per fold and one test row per completed cell, in cell order.
pub fn metrics_rows(result: &HoldoutSweep) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for c in &result.cells {
        let Some(r) = c.completed() else { continue };
        let base = cell_fields(&c.cell);
        for FoldReport { fold, validation, .. } in &r.folds {
            let mut row = base.clone();
            row.extend([fold.to_string(), "val".into(), validation.mae.to_string(), validation.mse.to_string()]);
            rows.push(row);
        }
        let mut row = base;
        row.extend(["ensemble".into(), "test".into(), r.test.mae.to_string(), r.test.mse.to_string()]);
        rows.push(row);
    }
    rows
}

/// Report view of the completed cells.
pub fn report_cells(result: &HoldoutSweep) -> Vec<ReportCell> {
    result
        .cells
        .iter()
        .filter_map(|c| {
            let r = c.completed()?;
            let val = (!r.folds.is_empty())
                .then(|| r.folds.iter().map(|f| f.validation.mae).sum::<f64>() / r.folds.len() as f64);
            Some(ReportCell {
                cell_id: c.cell.id.clone(),
                model: c.cell.model_label.clone(),
                strategy: c.cell.strategy_label(),
                mode: c.cell.mode.name().to_string(),
                preprocessing: c.cell.preprocessing.clone(),
                datetime_features: c.cell.datetime_features,
                id_features: c.cell.id_features,
                val_mae: val,
                test_mae: r.test.mae,
                test_mse: r.test.mse,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct ManifestCell<'a> {
    cell_id: &'a str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
    wall_ms: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    cells_total: usize,
    cells_completed: usize,
    cells_skipped: usize,
    wall_ms: f64,
    cells: Vec<ManifestCell<'a>>,
    config: &'a RunConfig,
}

fn write_manifest<T>(dir: &Path, command: &str, cfg: &RunConfig, result: &SweepResult<T>) -> Result<()> {
    let cells = result
        .cells
        .iter()
        .map(|c| {
            let (status, reason, message) = match &c.outcome {
                CellOutcome::Completed(_) => ("completed", None, None),
                CellOutcome::Skipped { reason, message } => ("skipped", Some(reason.as_str()), Some(message.as_str())),
            };
            ManifestCell {
                cell_id: &c.cell.id,
                status,
                reason,
                message,
                wall_ms: c.wall_ms,
            }
        })
        .collect();
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        config_hash: &result.config_hash,
        seed: result.seed,
        cells_total: result.cells.len(),
        cells_completed: result.n_completed(),
        cells_skipped: result.cells.len() - result.n_completed(),
        wall_ms: result.wall_ms,
        cells,
        config: cfg,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

fn write_cells_csv<T>(dir: &Path, result: &SweepResult<T>) -> Result<()> {
    let mut header: Vec<&str> = METRICS_COLUMNS[..8].to_vec();
    header.extend(["status", "reason", "config_hash", "seed"]);
    let rows = result.cells.iter().map(|c| {
        let mut row = cell_fields(&c.cell);
        match &c.outcome {
            CellOutcome::Completed(_) => row.extend(["completed".to_string(), String::new()]),
            CellOutcome::Skipped { reason, .. } => row.extend(["skipped".to_string(), reason.clone()]),
        }
        row.extend([result.config_hash.clone(), result.seed.to_string()]);
        row
    });
    write_rows(&dir.join("cells.csv"), &header, rows)
}

/// Paths written by [`write_sweep_outputs`].
#[derive(Debug, Clone)]
pub struct SweepOutputs {
    pub dir: PathBuf,
    pub metrics: PathBuf,
    pub rank_tables: PathBuf,
    pub leaderboard: PathBuf,
}

/// Writes `metrics.csv`, `cells.csv`, `rank_tables.csv`, `leaderboard.csv`,
/// `summary.json` and `manifest.json`, plus `forecasts/<cell>.csv` when
/// `forecasts` is set.
pub fn write_sweep_outputs(
    cfg: &RunConfig,
    result: &HoldoutSweep,
    dir: &Path,
    forecasts: bool,
) -> Result<SweepOutputs> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let metrics = dir.join("metrics.csv");
    write_rows(&metrics, &METRICS_COLUMNS, metrics_rows(result))?;
    write_cells_csv(dir, result)?;
    let cells = report_cells(result);
    let summary = report::summarize(&cells, &result.config_hash, result.seed, report::DEFAULT_TOP_K)?;
    let rank_tables = dir.join("rank_tables.csv");
    report::write_rank_tables_csv(&summary, &rank_tables)?;
    let leaderboard = dir.join("leaderboard.csv");
    report::write_leaderboard_csv(&summary, &leaderboard)?;
    write_json(&dir.join("summary.json"), &summary)?;
    write_manifest(dir, "sweep", cfg, result)?;
    if forecasts {
        let fdir = dir.join("forecasts");
        fs::create_dir_all(&fdir).map_err(|e| Error::io(&fdir, e))?;
        for c in &result.cells {
            if let Some(r) = c.completed() {
                r.forecast.write_csv(fdir.join(format!("{}.csv", c.cell.id)))?;
            }
        }
    }
    Ok(SweepOutputs {
        dir: dir.to_path_buf(),
        metrics,
        rank_tables,
        leaderboard,
    })
}

/// Writes `backtest.csv` (one row per cell and window, then a `mean` row),
/// `cells.csv` and `manifest.json`.
pub fn write_backtest_outputs(cfg: &RunConfig, result: &BacktestSweep, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut header: Vec<&str> = METRICS_COLUMNS[..8].to_vec();
    header.extend(["window", "offset", "MAE", "MSE"]);
    let mut rows = Vec::new();
    for c in &result.cells {
        let Some(r) = c.completed() else { continue };
        let base = cell_fields(&c.cell);
        for w in &r.windows {
            let mut row = base.clone();
            row.extend([
                w.window.to_string(),
                w.offset.to_string(),
                w.result.test.mae.to_string(),
                w.result.test.mse.to_string(),
            ]);
            rows.push(row);
        }
        let mut row = base;
        row.extend(["mean".into(), String::new(), r.mean.mae.to_string(), r.mean.mse.to_string()]);
        rows.push(row);
    }
    let path = dir.join("backtest.csv");
    write_rows(&path, &header, rows)?;
    write_cells_csv(dir, result)?;
    write_manifest(dir, "backtest", cfg, result)?;
    Ok(path)
}

/// Holdout forecast of one cell, for callers that want it in memory.
pub fn cell_forecast<'a>(result: &'a HoldoutSweep, cell_id: &str) -> Option<&'a Forecast> {
    result
        .cells
        .iter()
        .find(|c| c.cell.id == cell_id)
        .and_then(|c| c.completed())
        .map(|r| &r.forecast)
}
