use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{score_forecast, Metrics};
use super::splits::{make_cv_splits, CvScheme, SplitPlan};
use crate::data::{temporal_split, LongFrame};
use crate::error::{Error, Result};
use crate::models::Learner;
use crate::strategies::{fit_forecaster, fit_forecaster_with, Forecast, Forecaster, Mode, StrategySpec};
use crate::transforms::PipelineConfig;

/// One pipeline + strategy + mode + learner combination.
#[derive(Clone, Copy)]
pub struct Experiment<'a> {
    pub pipeline: &'a PipelineConfig,
    pub strategy: StrategySpec,
    pub mode: Mode,
    pub learner: &'a dyn Learner,
}

/// Cross-validation settings. `folds == 0` fits a single model on all the
/// training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSettings {
    pub scheme: CvScheme,
    pub folds: usize,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            scheme: CvScheme::Expanding,
            folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_rows: usize,
    pub validation: Metrics,
}

/// One forecaster per fold; forecasts are averaged in original units.
#[derive(Debug, Clone)]
pub struct CvEnsemble {
    pub forecasters: Vec<Forecaster>,
    pub folds: Vec<FoldReport>,
}

impl CvEnsemble {
    pub fn forecast(&self, context: &LongFrame, covariates: Option<&LongFrame>) -> Result<Forecast> {
        let each = self
            .forecasters
            .iter()
            .map(|f| f.forecast(context, covariates))
            .collect::<Result<Vec<_>>>()?;
        Forecast::mean(&each)
    }

    /// Mean validation MAE over folds.
    pub fn validation_mae(&self) -> Option<f64> {
        (!self.folds.is_empty())
            .then(|| self.folds.iter().map(|f| f.validation.mae).sum::<f64>() / self.folds.len() as f64)
    }
}

/// Fits one forecaster per fold and scores each on its validation range.
/// The validation range also supplies that fold's early-stopping rows.
pub fn cv_fit_ensemble(frame: &LongFrame, exp: &Experiment<'_>, plan: &SplitPlan) -> Result<CvEnsemble> {
    if plan.folds.is_empty() {
        let fc = fit_forecaster(frame, exp.pipeline, &exp.strategy, exp.mode, exp.learner)?;
        return Ok(CvEnsemble {
            forecasters: vec![fc],
            folds: Vec::new(),
        });
    }
    if plan.horizon != exp.strategy.horizon {
        return Err(Error::Constraint(format!(
            "split horizon {} differs from strategy horizon {}",
            plan.horizon, exp.strategy.horizon
        )));
    }
    let fitted = plan
        .folds
        .par_iter()
        .map(|fold| {
            let train = plan.train_frame(frame, fold)?;
            let extended = plan.extended_frame(frame, fold)?;
            let fc = fit_forecaster_with(&train, Some(&extended), exp.pipeline, &exp.strategy, exp.mode, exp.learner)?;
            let forecast = fc.forecast(&train, Some(&extended))?;
            let validation = score_forecast(&forecast, &extended)?.pooled;
            let report = FoldReport {
                fold: fold.index,
                train_rows: fc.training_rows(),
                validation,
            };
            Ok((fc, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let (forecasters, folds) = fitted.into_iter().unzip();
    Ok(CvEnsemble { forecasters, folds })
}

/// Result of fitting on all but the last `H` points and forecasting them.
#[derive(Debug, Clone)]
pub struct HoldoutResult {
    pub folds: Vec<FoldReport>,
    pub test: Metrics,
    pub forecast: Forecast,
}

/// Holds out the last `H` points of every series, cross-validates on the
/// rest, and scores the fold-ensemble forecast on the held-out block.
pub fn evaluate_holdout(frame: &LongFrame, exp: &Experiment<'_>, cv: &CvSettings) -> Result<HoldoutResult> {
    let h = exp.strategy.horizon;
    let (train, _) = temporal_split(frame, h)?;
    let history = exp.pipeline.history().unwrap_or(0);
    let plan = make_cv_splits(&train, cv.scheme, cv.folds, h, history)?;
    let ensemble = cv_fit_ensemble(&train, exp, &plan)?;
    let forecast = ensemble.forecast(&train, Some(frame))?;
    let test = score_forecast(&forecast, frame)?.pooled;
    Ok(HoldoutResult {
        folds: ensemble.folds,
        test,
        forecast,
    })
}

#[derive(Debug, Clone)]
pub struct BacktestWindow {
    pub window: usize,
    /// Points cut from the end of every series before the holdout.
    pub offset: usize,
    pub result: HoldoutResult,
}

#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub windows: Vec<BacktestWindow>,
    /// Mean of the per-window test metrics.
    pub mean: Metrics,
}

/// Rolling-origin backtest: window `w` of `n` forecasts the block ending
/// `(n - 1 - w) * stride` points before each series' end, refitting from
/// scratch every time.
pub fn backtest(
    frame: &LongFrame,
    exp: &Experiment<'_>,
    cv: &CvSettings,
    n_windows: usize,
    stride: usize,
) -> Result<BacktestReport> {
    if n_windows == 0 || stride == 0 {
        return Err(Error::Constraint("backtest needs at least one window and a positive stride".into()));
    }
    let h = exp.strategy.horizon;
    let history = exp.pipeline.history().unwrap_or(0);
    let required = (n_windows - 1) * stride + h + history + 1;
    let shortest = frame.min_len();
    if shortest < required {
        return Err(Error::TooShortForBacktest {
            windows: n_windows,
            length: shortest,
            required,
        });
    }
    let windows = (0..n_windows)
        .into_par_iter()
        .map(|w| {
            let offset = (n_windows - 1 - w) * stride;
            let cut = frame.truncate_each(|n| n - offset);
            Ok(BacktestWindow {
                window: w,
                offset,
                result: evaluate_holdout(&cut, exp, cv)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = windows.len() as f64;
    let mean = Metrics {
        mae: windows.iter().map(|w| w.result.test.mae).sum::<f64>() / k,
        mse: windows.iter().map(|w| w.result.test.mse).sum::<f64>() / k,
        n: windows.iter().map(|w| w.result.test.n).sum(),
    };
    Ok(BacktestReport { windows, mean })
}
