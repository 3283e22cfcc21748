use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::dataset::{
    base_matrix, channel_names, encode_horizon, ensure_mode_fits, normalize_rows, shape,
};
use super::{Mode, StrategyKind, StrategySpec};
use crate::data::{Frequency, LongFrame, Series};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::{Learner, Predictor, TrainedModel, TrainingData};
use crate::transforms::{
    ChannelWindow, ColumnMeta, FeatureMatrix, FeatureSchema, GroupWindow, LknPlan, PipelineConfig,
    PipelineState, SeriesAnchors, TargetMeta,
};

/// Everything needed to forecast: fitted pipeline, frozen column layout and
/// one model per strategy segment.
#[derive(Debug, Clone)]
pub struct Forecaster {
    strategy: StrategySpec,
    mode: Mode,
    pipeline: PipelineState,
    schema: FeatureSchema,
    columns: Vec<ColumnMeta>,
    targets: Vec<Vec<TargetMeta>>,
    models: Vec<Arc<dyn Predictor>>,
    training_rows: usize,
    validation_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesForecast {
    pub series_id: String,
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

/// `H` predictions per series, sorted by series id.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub frequency: Frequency,
    pub series: Vec<SeriesForecast>,
}

impl Forecast {
    pub fn get(&self, series_id: &str) -> Option<&SeriesForecast> {
        self.series
            .binary_search_by(|s| s.series_id.as_str().cmp(series_id))
            .ok()
            .map(|i| &self.series[i])
    }

    /// Element-wise mean of forecasts over the same series and timestamps.
    pub fn mean(forecasts: &[Forecast]) -> Result<Forecast> {
        let first = forecasts
            .first()
            .ok_or_else(|| Error::InvalidData("no forecasts to average".into()))?;
        let mut out = first.clone();
        for f in &forecasts[1..] {
            if f.series.len() != out.series.len() {
                return Err(Error::LengthMismatch {
                    left: f.series.len(),
                    right: out.series.len(),
                });
            }
            for (acc, s) in out.series.iter_mut().zip(&f.series) {
                if acc.series_id != s.series_id || acc.timestamps != s.timestamps {
                    return Err(Error::InvalidData(format!(
                        "forecasts for `{}` do not line up",
                        acc.series_id
                    )));
                }
                acc.values.iter_mut().zip(&s.values).for_each(|(a, v)| *a += v);
            }
        }
        let k = forecasts.len() as f64;
        for s in &mut out.series {
            s.values.iter_mut().for_each(|v| *v /= k);
        }
        Ok(out)
    }

    /// Long table `series_id,timestamp,prediction`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(["series_id", "timestamp", "prediction"])
            .map_err(|e| csv_io(path, e))?;
        for s in &self.series {
            for (t, v) in s.timestamps.iter().zip(&s.values) {
                w.write_record([s.series_id.clone(), self.frequency.format_tick(*t), v.to_string()])
                    .map_err(|e| csv_io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

/// Fits the pipeline on `train` and one model per strategy segment. Learners
/// that ask for validation data get the last 20% of anchor times.
pub fn fit_forecaster(
    train: &LongFrame,
    pipeline: &PipelineConfig,
    strategy: &StrategySpec,
    mode: Mode,
    learner: &dyn Learner,
) -> Result<Forecaster> {
    fit_forecaster_with(train, None, pipeline, strategy, mode, learner)
}

/// Like [`fit_forecaster`], with an explicit validation range: `extended`
/// holds the training points followed by validation points for each
/// series. The pipeline is fitted on `train` only; rows whose targets reach
/// past the training range become validation rows.
pub fn fit_forecaster_with(
    train: &LongFrame,
    extended: Option<&LongFrame>,
    pipeline: &PipelineConfig,
    strategy: &StrategySpec,
    mode: Mode,
    learner: &dyn Learner,
) -> Result<Forecaster> {
    strategy.validate()?;
    ensure_mode_fits(train, mode)?;
    let state = PipelineState::fit(pipeline, train)?;
    let schema = state.schema(channel_names(train, mode), !mode.mixes_channels());
    let width = strategy.row_width();
    let dropped = state.dropped_points();

    let (train_rows, valid_rows) = match extended {
        Some(ext) => {
            ensure_mode_fits(ext, mode)?;
            let (transformed, _) = state.transform(ext)?;
            let base = normalize_rows(base_matrix(&transformed, &schema, mode, width, dropped)?, &state)?;
            let step = train.frequency().step;
            let cutoff: BTreeMap<&str, i64> = train
                .series()
                .iter()
                .map(|s| (s.id.as_str(), s.timestamps.last().copied().unwrap_or(i64::MIN) - width as i64 * step))
                .collect();
            let common = cutoff.values().copied().min().unwrap_or(i64::MIN);
            let in_train = |a: &crate::transforms::RowAnchor| match &a.series_id {
                Some(id) => cutoff.get(id.as_str()).is_some_and(|c| a.timestamp <= *c),
                None => a.timestamp <= common,
            };
            let t = base.filter_rows(|_, a| in_train(a));
            if t.n_rows() == 0 {
                // surface the precise reason from the training range alone
                let (tt, _) = state.transform(train)?;
                base_matrix(&tt, &schema, mode, width, dropped)?;
                return Err(Error::TooFewSamples { samples: 0, required: 1 });
            }
            let v = base.filter_rows(|_, a| !in_train(a));
            (t, Some(v).filter(|v| v.n_rows() > 0))
        }
        None => {
            let (transformed, _) = state.transform(train)?;
            let base = normalize_rows(base_matrix(&transformed, &schema, mode, width, dropped)?, &state)?;
            if learner.uses_validation() {
                internal_split(base)
            } else {
                (base, None)
            }
        }
    };

    let train_segments = shape(train_rows, strategy);
    let valid_segments = valid_rows.map(|v| shape(v, strategy));
    let training_rows = train_segments[0].n_rows();
    let validation_rows = valid_segments.as_ref().map_or(0, |v| v[0].n_rows());
    let models = (0..train_segments.len())
        .into_par_iter()
        .map(|k| {
            let t = &train_segments[k];
            let train_data = TrainingData {
                x: &t.x,
                y: &t.y,
                columns: &t.columns,
                targets: &t.targets,
            };
            let valid_data = valid_segments.as_ref().map(|v| TrainingData {
                x: &v[k].x,
                y: &v[k].y,
                columns: &v[k].columns,
                targets: &v[k].targets,
            });
            learner.fit(&train_data, valid_data.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    for (m, seg) in models.iter().zip(&train_segments) {
        if m.n_features() != seg.x.cols() || m.n_outputs() != seg.y.cols() {
            return Err(Error::DimensionMismatch {
                expected: seg.y.cols(),
                actual: m.n_outputs(),
            });
        }
    }
    Ok(Forecaster {
        strategy: *strategy,
        mode,
        pipeline: state,
        schema,
        columns: train_segments[0].columns.clone(),
        targets: train_segments.iter().map(|s| s.targets.clone()).collect(),
        models,
        training_rows,
        validation_rows,
    })
}

/// Last 20% of distinct anchor times become validation rows.
fn internal_split(base: FeatureMatrix) -> (FeatureMatrix, Option<FeatureMatrix>) {
    let mut times: Vec<i64> = base.anchors.iter().map(|a| a.timestamp).collect();
    times.sort_unstable();
    times.dedup();
    if times.len() < 5 {
        return (base, None);
    }
    let cutoff = times[(times.len() * 4) / 5];
    let train = base.filter_rows(|_, a| a.timestamp < cutoff);
    let valid = base.filter_rows(|_, a| a.timestamp >= cutoff);
    (train, Some(valid))
}

/// Working history of one row group in transformed space.
struct Group {
    ids: Vec<String>,
    id_index: Option<usize>,
    target: Vec<Vec<f64>>,
    exog: Vec<Vec<Vec<f64>>>,
    observed: usize,
    last_tick: i64,
    predictions: Vec<Vec<f64>>,
}

impl Group {
    fn label(&self) -> String {
        if self.ids.len() == 1 {
            self.ids[0].clone()
        } else {
            "<multivariate>".into()
        }
    }
}

impl Forecaster {
    pub fn strategy(&self) -> &StrategySpec {
        &self.strategy
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn pipeline(&self) -> &PipelineState {
        &self.pipeline
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Input columns of every model.
    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn models(&self) -> &[Arc<dyn Predictor>] {
        &self.models
    }

    pub fn training_rows(&self) -> usize {
        self.training_rows
    }

    pub fn validation_rows(&self) -> usize {
        self.validation_rows
    }

    /// The built-in models, when every segment uses one.
    pub fn trained_models(&self) -> Option<Vec<&TrainedModel>> {
        self.models.iter().map(|m| m.as_trained()).collect()
    }

    /// Points each series must supply.
    pub fn required_context(&self) -> usize {
        self.pipeline.required_context()
    }

    /// Forecasts `H` steps past the end of every series in `context`.
    /// `covariates` supplies future exogenous values (needed only by
    /// recursive strategies with exogenous lags); its target values are
    /// never read.
    pub fn forecast(&self, context: &LongFrame, covariates: Option<&LongFrame>) -> Result<Forecast> {
        ensure_mode_fits(context, self.mode)?;
        let required = self.required_context();
        for s in context.series() {
            if s.len() < required {
                return Err(Error::InsufficientHistory {
                    series: s.id.clone(),
                    available: s.len(),
                    required,
                });
            }
        }
        if self.mode.mixes_channels() {
            let ids = context.series_ids();
            if let Some(missing) = self.schema.channels.iter().find(|c| !ids.contains(&c.as_str())) {
                return Err(Error::InvalidData(format!("series `{missing}` missing from multivariate input")));
            }
            if let Some(extra) = ids.iter().find(|id| !self.schema.channels.iter().any(|c| c == *id)) {
                return Err(Error::UnknownSeries(extra.to_string()));
            }
        }
        let (transformed, anchors) = self.pipeline.transform(context)?;
        let future_exog = self.future_exogenous(context, covariates)?;
        let mut groups = self.groups(&transformed, future_exog)?;
        match self.strategy.kind {
            StrategyKind::Recursive => self.run_recursive(&mut groups)?,
            _ => self.run_batch(&mut groups)?,
        }
        self.assemble(context, groups, &anchors.series)
    }

    /// Exogenous columns needed beyond the context, transformed together
    /// with it. `None` when the strategy never looks past the origin.
    fn future_exogenous(
        &self,
        context: &LongFrame,
        covariates: Option<&LongFrame>,
    ) -> Result<Option<BTreeMap<String, Vec<Vec<f64>>>>> {
        let steps_ahead = match self.strategy.kind {
            StrategyKind::Recursive => (self.strategy.n_iterations() - 1) * self.strategy.model_horizon,
            _ => 0,
        };
        if self.schema.exogenous.is_empty() || steps_ahead == 0 {
            return Ok(None);
        }
        let step = context.frequency().step;
        let mut extended = Vec::with_capacity(context.n_series());
        for s in context.series() {
            let last = *s.timestamps.last().unwrap();
            let future = covariates.and_then(|c| c.get(&s.id));
            let mut ext = s.clone();
            for k in 1..=steps_ahead as i64 {
                let tick = last + k * step;
                let missing = |column: &str| Error::MissingCovariates {
                    series: s.id.clone(),
                    column: column.to_string(),
                    timestamp: tick,
                };
                let pos = future
                    .and_then(|f| f.timestamps.binary_search(&tick).ok())
                    .ok_or_else(|| missing(&self.schema.exogenous[0].name))?;
                let f = future.unwrap();
                ext.timestamps.push(tick);
                ext.values.push(f64::NAN);
                for (c, col) in ext.exog.iter_mut().enumerate() {
                    let v = f.exog[c][pos];
                    if v.is_nan() {
                        return Err(missing(&context.exogenous()[c].name));
                    }
                    col.push(v);
                }
            }
            extended.push(ext);
        }
        let frame = LongFrame::from_series(context.frequency(), context.exogenous().to_vec(), extended)?;
        let (transformed, _) = self.pipeline.transform(&frame)?;
        Ok(Some(
            transformed
                .series()
                .iter()
                .map(|s| (s.id.clone(), s.exog.clone()))
                .collect(),
        ))
    }

    fn groups(
        &self,
        transformed: &LongFrame,
        future_exog: Option<BTreeMap<String, Vec<Vec<f64>>>>,
    ) -> Result<Vec<Group>> {
        let n_exog = self.schema.exogenous.len();
        let exog_of = |s: &Series| -> Vec<Vec<f64>> {
            match future_exog.as_ref().and_then(|m| m.get(&s.id)) {
                Some(cols) => cols[..n_exog].to_vec(),
                None => s.exog[..n_exog].to_vec(),
            }
        };
        let make = |series: &[&Series], id_index: Option<usize>| Group {
            ids: series.iter().map(|s| s.id.clone()).collect(),
            id_index,
            target: series.iter().map(|s| s.values.clone()).collect(),
            exog: series.iter().map(|s| exog_of(s)).collect(),
            observed: series[0].len(),
            last_tick: *series[0].timestamps.last().unwrap(),
            predictions: vec![Vec::with_capacity(self.strategy.horizon); series.len()],
        };
        if self.mode.mixes_channels() {
            let all: Vec<&Series> = transformed.series().iter().collect();
            return Ok(vec![make(&all, None)]);
        }
        let vocab = self.schema.id.as_ref().map(|(_, v)| v);
        transformed
            .series()
            .iter()
            .map(|s| {
                let id_index = vocab.map(|v| v.index(&s.id)).transpose()?;
                Ok(make(&[s], id_index))
            })
            .collect()
    }

    /// Raw feature row at the group's current end, plus its last-known
    /// values.
    fn current_row(&self, g: &Group, plan: Option<&LknPlan>) -> Result<(Vec<f64>, Vec<f64>)> {
        let h = self.schema.history;
        let a = g.target[0].len() - 1;
        let lo = a + 1 - h;
        let anchor = g.last_tick + (a + 1 - g.observed) as i64 * self.pipeline.frequency().step;
        for (c, cols) in g.exog.iter().enumerate() {
            for (k, col) in cols.iter().enumerate() {
                if col.len() <= a {
                    return Err(Error::MissingCovariates {
                        series: g.ids[c].clone(),
                        column: self.schema.exogenous[k].name.clone(),
                        timestamp: anchor,
                    });
                }
            }
        }
        let window = GroupWindow {
            anchor,
            id_index: g.id_index,
            channels: (0..g.ids.len())
                .map(|c| ChannelWindow {
                    target: &g.target[c][lo..=a],
                    exog: g.exog[c].iter().map(|col| &col[lo..=a]).collect(),
                })
                .collect(),
            horizon: None,
        };
        let mut x = Vec::with_capacity(self.columns.len());
        self.schema.write_row(&window, &mut x)?;
        let last_known: Vec<f64> = (0..g.ids.len()).map(|c| g.target[c][a]).collect();
        if let Some(plan) = plan {
            if plan.forward_row(&mut x, None).is_err() {
                return Err(Error::ZeroAnchor {
                    series: g.label(),
                    timestamp: anchor,
                });
            }
        }
        Ok((x, last_known))
    }

    fn plan(&self, model: usize) -> Result<Option<LknPlan>> {
        self.pipeline.lkn_plan(&self.columns, &self.targets[model])
    }

    fn predict(&self, model: usize, rows: &[Vec<f64>]) -> Result<Matrix> {
        let x = Matrix::from_rows(rows);
        let out = self.models[model].predict(&x)?;
        if out.rows() != rows.len() || out.cols() != self.targets[model].len() {
            return Err(Error::DimensionMismatch {
                expected: self.targets[model].len(),
                actual: out.cols(),
            });
        }
        Ok(out)
    }

    fn run_recursive(&self, groups: &mut [Group]) -> Result<()> {
        let plan = self.plan(0)?;
        let targets = &self.targets[0];
        for _ in 0..self.strategy.n_iterations() {
            let mut rows = Vec::with_capacity(groups.len());
            let mut refs = Vec::with_capacity(groups.len());
            for g in groups.iter() {
                let (x, lk) = self.current_row(g, plan.as_ref())?;
                rows.push(x);
                refs.push(lk);
            }
            let out = self.predict(0, &rows)?;
            for (r, g) in groups.iter_mut().enumerate() {
                let mut y = out.row(r).to_vec();
                if let Some(plan) = &plan {
                    plan.inverse_targets(&mut y, targets, &refs[r]);
                }
                // targets are channel-major with steps in order
                for (v, t) in y.iter().zip(targets) {
                    g.target[t.channel].push(*v);
                    g.predictions[t.channel].push(*v);
                }
            }
        }
        Ok(())
    }

    fn run_batch(&self, groups: &mut [Group]) -> Result<()> {
        let h = self.strategy.horizon;
        let fwm = self.strategy.kind == StrategyKind::FlatWideMimo;
        for g in groups.iter_mut() {
            g.predictions.iter_mut().for_each(|p| p.resize(h, f64::NAN));
        }
        for model in 0..self.models.len() {
            let plan = self.plan(model)?;
            let targets = &self.targets[model];
            let mut rows = Vec::new();
            let mut refs = Vec::with_capacity(groups.len());
            for g in groups.iter() {
                let (x, lk) = self.current_row(g, plan.as_ref())?;
                if fwm {
                    for k in 1..=h {
                        let mut row = x.clone();
                        encode_horizon(self.strategy.horizon_encoding, h, k, &mut row);
                        rows.push(row);
                    }
                } else {
                    rows.push(x);
                }
                refs.push(lk);
            }
            let out = self.predict(model, &rows)?;
            let per_group = if fwm { h } else { 1 };
            for (gi, g) in groups.iter_mut().enumerate() {
                for k in 0..per_group {
                    let mut y = out.row(gi * per_group + k).to_vec();
                    if let Some(plan) = &plan {
                        plan.inverse_targets(&mut y, targets, &refs[gi]);
                    }
                    for (v, t) in y.iter().zip(targets) {
                        let step = t.step.unwrap_or(k);
                        g.predictions[t.channel][step] = *v;
                    }
                }
            }
        }
        Ok(())
    }

    fn assemble(
        &self,
        context: &LongFrame,
        groups: Vec<Group>,
        anchors: &BTreeMap<String, SeriesAnchors>,
    ) -> Result<Forecast> {
        let h = self.strategy.horizon;
        let step = context.frequency().step;
        let mut series = Vec::with_capacity(context.n_series());
        for g in groups {
            for (c, id) in g.ids.iter().enumerate() {
                let a = anchors
                    .get(id)
                    .ok_or_else(|| Error::MissingAnchor(format!("no anchors for series `{id}`")))?;
                let values = self.pipeline.inverse_series(id, &g.predictions[c][..h], a)?;
                let last = *context.get(id).unwrap().timestamps.last().unwrap();
                series.push(SeriesForecast {
                    series_id: id.clone(),
                    timestamps: (1..=h as i64).map(|k| last + k * step).collect(),
                    values,
                });
            }
        }
        series.sort_by(|a, b| a.series_id.cmp(&b.series_id));
        Ok(Forecast {
            frequency: context.frequency(),
            series,
        })
    }
}

/// Iterated forecast; errors unless the forecaster is recursive.
pub fn forecast_recursive(fc: &Forecaster, frame: &LongFrame) -> Result<Forecast> {
    if fc.strategy.kind != StrategyKind::Recursive {
        return Err(Error::InvalidStrategySpec(format!(
            "forecast_recursive called on a {} forecaster",
            fc.strategy.kind
        )));
    }
    fc.forecast(frame, None)
}

/// Single-shot forecast for MIMO, direct and flat-wide MIMO.
pub fn forecast_batch(fc: &Forecaster, frame: &LongFrame) -> Result<Forecast> {
    if fc.strategy.kind == StrategyKind::Recursive {
        return Err(Error::InvalidStrategySpec(
            "forecast_batch called on a recursive forecaster".into(),
        ));
    }
    fc.forecast(frame, None)
}
