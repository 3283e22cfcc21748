use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stratcast::config::{parse_config, RunConfig};
use stratcast::data::{validate_frame, write_long_csv, CsvOptions, RoleMap};
use stratcast::report::{self, Format};
use stratcast::sweep::{self, SweepOptions};
use stratcast::synthetic::{random_walk_with_drift, seasonal_panel, PanelParams, RandomWalkParams};
use stratcast::validation::{cv_fit_ensemble, make_cv_splits, Experiment};
use stratcast::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "stratcast", version, about = "Multi-step forecasting strategy sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Load the dataset named in a config and report invariant violations.
    ValidateData {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Evaluate one grid cell and forecast past the end of the data.
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Cell id; required when the grid has more than one cell.
        #[arg(long)]
        cell: Option<String>,
    },
    /// Evaluate every grid cell on a final holdout.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// Also write each cell's holdout forecast.
        #[arg(long)]
        forecasts: bool,
    },
    /// Rolling-origin backtest of every grid cell.
    Backtest {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Print rank tables and the leaderboard of a finished sweep.
    Report {
        /// Sweep output directory or a metrics.csv file.
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
        #[arg(long, default_value_t = report::DEFAULT_TOP_K)]
        top: usize,
    },
    /// Write a synthetic dataset as CSV (columns id,date,y).
    Generate {
        #[arg(long, value_enum)]
        kind: SyntheticKind,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        series: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SyntheticKind {
    RandomWalk,
    Panel,
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn options(args: &RunArgs, only: Option<Vec<String>>) -> SweepOptions {
    SweepOptions { jobs: args.jobs, only }
}

fn validate_data(config: &Path) -> Result<()> {
    let cfg = parse_config(config)?;
    let frame = cfg.load_dataset()?;
    let report = validate_frame(&frame);
    println!(
        "{} series, {} records, aligned: {}",
        frame.n_series(),
        frame.n_records(),
        report.aligned
    );
    for s in &report.series {
        println!("  {}: {} points", s.series_id, s.length);
    }
    let violations = report.violations();
    for v in &violations {
        println!("violation: {v}");
    }
    if violations.is_empty() {
        println!("ok");
    }
    report.ensure_clean()
}

fn run(args: &RunArgs, cell: Option<String>) -> Result<()> {
    let cfg = load_config(args)?;
    let frame = cfg.load_dataset()?;
    let cells = sweep::expand_grid(&cfg)?;
    let chosen = match (cell, cells.len()) {
        (Some(id), _) => cells
            .into_iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::Constraint(format!("no cell with id `{id}`")))?,
        (None, 1) => cells.into_iter().next().expect("one cell"),
        (None, n) => {
            return Err(Error::Constraint(format!(
                "the grid has {n} cells; pick one with --cell or use `sweep`"
            )))
        }
    };
    let result = sweep::run_sweep(&cfg, &frame, &options(args, Some(vec![chosen.id.clone()])))?;
    let outputs = sweep::write_sweep_outputs(&cfg, &result, &cfg.output_dir, true)?;
    let r = result.cells[0].completed().expect("completed cell");
    for f in &r.folds {
        println!("fold {} val MAE {} MSE {}", f.fold, f.validation.mae, f.validation.mse);
    }
    println!("test MAE {} MSE {}", r.test.mae, r.test.mse);

    let pipeline = chosen.pipeline.clone().map_err(Error::InvalidPipeline)?;
    let exp = Experiment {
        pipeline: &pipeline,
        strategy: chosen.strategy,
        mode: chosen.mode,
        learner: &chosen.model,
    };
    let cv = cfg.validation.cv()?;
    let plan = make_cv_splits(&frame, cv.scheme, cv.folds, cfg.horizon, pipeline.history().unwrap_or(0))?;
    let ensemble = cv_fit_ensemble(&frame, &exp, &plan)?;
    match ensemble.forecast(&frame, None) {
        Ok(fc) => {
            let path = outputs.dir.join("forecast.csv");
            fc.write_csv(&path)?;
            println!("forecast written to {}", path.display());
        }
        Err(e) => log::warn!("no out-of-sample forecast: {e}"),
    }
    let models_dir = outputs.dir.join("models");
    std::fs::create_dir_all(&models_dir).map_err(|e| Error::Io {
        path: models_dir.clone(),
        source: e,
    })?;
    for (k, f) in ensemble.forecasters.iter().enumerate() {
        for (j, m) in f.trained_models().unwrap_or_default().into_iter().enumerate() {
            m.save(&chosen.model, models_dir.join(format!("fold{k}_segment{j}.json")))?;
        }
    }
    Ok(())
}

fn sweep_cmd(args: &RunArgs, forecasts: bool) -> Result<()> {
    let cfg = load_config(args)?;
    let frame = cfg.load_dataset()?;
    let result = sweep::run_sweep(&cfg, &frame, &options(args, None))?;
    let outputs = sweep::write_sweep_outputs(&cfg, &result, &cfg.output_dir, forecasts)?;
    println!(
        "{} of {} cells completed; results in {}",
        result.n_completed(),
        result.cells.len(),
        outputs.dir.display()
    );
    let summary = report::summarize(&sweep::report_cells(&result), &result.config_hash, result.seed, report::DEFAULT_TOP_K)?;
    print!("{}", report::render(&summary, Format::Table));
    Ok(())
}

fn backtest_cmd(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let frame = cfg.load_dataset()?;
    let result = sweep::run_backtest(&cfg, &frame, &options(args, None))?;
    let path = sweep::write_backtest_outputs(&cfg, &result, &cfg.output_dir)?;
    for c in &result.cells {
        if let Some(r) = c.completed() {
            println!("{} {} mean MAE {}", c.cell.id, c.cell.strategy_label(), r.mean.mae);
        }
    }
    println!("backtest written to {}", path.display());
    Ok(())
}

fn report_cmd(path: &Path, format: ReportFormat, top: usize) -> Result<()> {
    let metrics = if path.is_dir() { path.join("metrics.csv") } else { path.to_path_buf() };
    let cells = report::load_metrics(&metrics)?;
    let cells_csv = metrics.with_file_name("cells.csv");
    let (hash, seed) = read_hash_seed(&cells_csv).unwrap_or_default();
    let summary = report::summarize(&cells, &hash, seed, top)?;
    let format = match format {
        ReportFormat::Table => Format::Table,
        ReportFormat::Csv => Format::Csv,
    };
    print!("{}", report::render(&summary, format));
    Ok(())
}

fn read_hash_seed(path: &Path) -> Option<(String, u64)> {
    let mut r = csv::Reader::from_path(path).ok()?;
    let headers = r.headers().ok()?.clone();
    let h = headers.iter().position(|c| c == "config_hash")?;
    let s = headers.iter().position(|c| c == "seed")?;
    let rec = r.records().next()?.ok()?;
    Some((rec.get(h)?.to_string(), rec.get(s)?.parse().ok()?))
}

fn generate(kind: SyntheticKind, output: &Path, seed: u64, series: Option<usize>, length: Option<usize>) -> Result<()> {
    let frame = match kind {
        SyntheticKind::RandomWalk => {
            let d = RandomWalkParams::default();
            random_walk_with_drift(&RandomWalkParams {
                n_series: series.unwrap_or(d.n_series),
                length: length.unwrap_or(d.length),
                seed,
                ..d
            })?
        }
        SyntheticKind::Panel => {
            let d = PanelParams::default();
            seasonal_panel(&PanelParams {
                n_series: series.unwrap_or(d.n_series),
                length: length.unwrap_or(d.length),
                seed,
                ..d
            })?
        }
    };
    let roles = RoleMap {
        id: "id".into(),
        datetime: "date".into(),
        target: "y".into(),
        exogenous: Vec::new(),
    };
    write_long_csv(&frame, &roles, output, CsvOptions::default())?;
    println!("wrote {} series x {} points to {}", frame.n_series(), frame.min_len(), output.display());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::NoRunnableCells => 4,
        ErrorKind::Model | ErrorKind::Io => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STRATCAST_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ValidateData { config } => validate_data(config),
        Command::Run { args, cell } => run(args, cell.clone()),
        Command::Sweep { args, forecasts } => sweep_cmd(args, *forecasts),
        Command::Backtest { args } => backtest_cmd(args),
        Command::Report { path, format, top } => report_cmd(path, *format, *top),
        Command::Generate {
            kind,
            output,
            seed,
            series,
            length,
        } => generate(*kind, output, *seed, *series, *length),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
