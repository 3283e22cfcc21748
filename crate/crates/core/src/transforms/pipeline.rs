use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::calendar::DatePart;
use super::difference::{difference_normalize, integrate};
use super::ids::{IdEncoding, IdVocabulary};
use super::lag::FeatureSchema;
use super::lkn::LknPlan;
use super::lag::{ColumnMeta, TargetMeta};
use super::scaler::ScalerParams;
use super::{ApplyTo, NormMode, PipelineConfig, TransformSpec};
use crate::data::{ExogColumn, Frequency, LongFrame};
use crate::error::{Error, Result};

/// A fitted series-level step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SeriesStep {
    Scale { params: ScalerParams },
    Difference { mode: NormMode, apply_to: ApplyTo },
}

/// Per-series state needed to map one step's forecasts back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepAnchor {
    Scale,
    /// Last target value entering the difference step.
    Difference { last: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesAnchors {
    /// Last value of the fully transformed series: the last-known
    /// reference of a forecast row built at the series end.
    pub last_transformed: f64,
    /// One entry per series-level step, in forward order.
    pub steps: Vec<StepAnchor>,
}

/// Anchors for every series of a transformed frame, keyed by series id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionAnchors {
    pub series: BTreeMap<String, SeriesAnchors>,
}

/// A fitted transform chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    config: PipelineConfig,
    history: usize,
    frequency: Frequency,
    exogenous: Vec<ExogColumn>,
    lag_exogenous: bool,
    steps: Vec<SeriesStep>,
    datetime: Option<(Vec<DatePart>, usize)>,
    id: Option<(IdEncoding, IdVocabulary)>,
    lkn: Option<(NormMode, ApplyTo)>,
}

impl PipelineState {
    /// Fits every step on `train`, in order. The lag history must be set.
    pub fn fit(config: &PipelineConfig, train: &LongFrame) -> Result<PipelineState> {
        let history = config
            .history()
            .ok_or_else(|| Error::InvalidPipeline("lag history is not set".into()))?;
        let mut frame = train.clone();
        let mut steps = Vec::new();
        let mut datetime = None;
        let mut id = None;
        let mut lkn = None;
        let mut lag_exogenous = true;
        for spec in config.steps() {
            match spec {
                TransformSpec::StandardScaler { apply_to, pooled } => {
                    let params = ScalerParams::fit(&frame, *apply_to, *pooled);
                    frame = params.apply(&frame)?;
                    steps.push(SeriesStep::Scale { params });
                }
                TransformSpec::DifferenceNormalizer { mode, apply_to } => {
                    frame = difference_normalize(&frame, *mode, *apply_to)?.0;
                    steps.push(SeriesStep::Difference {
                        mode: *mode,
                        apply_to: *apply_to,
                    });
                }
                TransformSpec::DatetimeFeatures { parts, lags } => {
                    if !parts.is_empty() {
                        if !train.frequency().is_calendar() {
                            return Err(Error::OrdinalTimestamps);
                        }
                        datetime = Some((parts.clone(), *lags));
                    }
                }
                TransformSpec::IdFeatures { encoding } => {
                    id = Some((*encoding, IdVocabulary::from_frame(train)));
                }
                TransformSpec::Lag { exogenous, .. } => lag_exogenous = *exogenous,
                TransformSpec::LastKnownNormalizer { mode, apply_to } => {
                    lkn = Some((*mode, *apply_to));
                }
            }
        }
        Ok(PipelineState {
            config: config.clone(),
            history,
            frequency: train.frequency(),
            exogenous: train.exogenous().to_vec(),
            lag_exogenous,
            steps,
            datetime,
            id,
            lkn,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn history(&self) -> usize {
        self.history
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn last_known(&self) -> Option<(NormMode, ApplyTo)> {
        self.lkn
    }

    /// Points lost at the start of every series by differencing.
    pub fn dropped_points(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, SeriesStep::Difference { .. }))
            .count()
    }

    /// Points a series needs before its first forecast row can be built.
    pub fn required_context(&self) -> usize {
        self.history + self.dropped_points()
    }

    pub fn id_vocabulary(&self) -> Option<&IdVocabulary> {
        self.id.as_ref().map(|(_, v)| v)
    }

    /// Column layout for rows over `channels`. Id features are only used
    /// when each row belongs to a single series.
    pub fn schema(&self, channels: Vec<String>, per_series_rows: bool) -> FeatureSchema {
        FeatureSchema {
            channels,
            history: self.history,
            frequency: self.frequency,
            exogenous: if self.lag_exogenous {
                self.exogenous.clone()
            } else {
                Vec::new()
            },
            datetime: self.datetime.clone(),
            id: if per_series_rows { self.id.clone() } else { None },
            horizon: None,
        }
    }

    pub(crate) fn lkn_plan(&self, columns: &[ColumnMeta], targets: &[TargetMeta]) -> Result<Option<LknPlan>> {
        self.lkn
            .map(|(mode, apply_to)| LknPlan::new(columns, targets, mode, apply_to))
            .transpose()
    }

    /// Applies the series-level steps. Anchors describe the end of every
    /// series in `frame`.
    pub fn transform(&self, frame: &LongFrame) -> Result<(LongFrame, PredictionAnchors)> {
        let mut out = frame.clone();
        let mut per_step: Vec<Vec<StepAnchor>> = vec![Vec::new(); frame.n_series()];
        for step in &self.steps {
            match step {
                SeriesStep::Scale { params } => {
                    out = params.apply(&out)?;
                    per_step.iter_mut().for_each(|a| a.push(StepAnchor::Scale));
                }
                SeriesStep::Difference { mode, apply_to } => {
                    let (next, anchors) = difference_normalize(&out, *mode, *apply_to)?;
                    for (a, d) in per_step.iter_mut().zip(anchors) {
                        a.push(StepAnchor::Difference { last: d.last_target });
                    }
                    out = next;
                }
            }
        }
        let series = out
            .series()
            .iter()
            .zip(per_step)
            .map(|(s, steps)| {
                (
                    s.id.clone(),
                    SeriesAnchors {
                        last_transformed: s.values.last().copied().unwrap_or(f64::NAN),
                        steps,
                    },
                )
            })
            .collect();
        Ok((out, PredictionAnchors { series }))
    }

    /// Maps one series' forecasts from transformed series space (after the
    /// last-known inverse) back to original units.
    pub fn inverse_series(&self, series_id: &str, predictions: &[f64], anchors: &SeriesAnchors) -> Result<Vec<f64>> {
        if anchors.steps.len() != self.steps.len() {
            return Err(Error::MissingAnchor(format!(
                "series `{series_id}` has {} step anchors, pipeline has {} steps",
                anchors.steps.len(),
                self.steps.len()
            )));
        }
        let mut values = predictions.to_vec();
        for (step, anchor) in self.steps.iter().zip(&anchors.steps).rev() {
            match (step, anchor) {
                (SeriesStep::Scale { params }, StepAnchor::Scale) => {
                    if let Some(m) = params.lookup(series_id)?.target {
                        values.iter_mut().for_each(|v| *v = m.unscale(*v));
                    }
                }
                (SeriesStep::Difference { mode, apply_to }, StepAnchor::Difference { last }) => {
                    if apply_to.target() {
                        values = integrate(*last, &values, *mode);
                    }
                }
                _ => {
                    return Err(Error::MissingAnchor(format!(
                        "step anchors of series `{series_id}` do not match the pipeline"
                    )))
                }
            }
        }
        Ok(values)
    }
}

/// Maps per-series forecasts made at the end of the transformed series
/// back to original units: last-known inverse (when configured), then the
/// series-level steps in reverse order.
pub fn inverse_pipeline(
    state: &PipelineState,
    predictions: &BTreeMap<String, Vec<f64>>,
    anchors: &PredictionAnchors,
) -> Result<BTreeMap<String, Vec<f64>>> {
    predictions
        .iter()
        .map(|(id, preds)| {
            let a = anchors
                .series
                .get(id)
                .ok_or_else(|| Error::MissingAnchor(format!("no anchors for series `{id}`")))?;
            let mut values = preds.clone();
            if let Some((mode, apply_to)) = state.lkn {
                if apply_to.target() {
                    values.iter_mut().for_each(|v| *v = mode.inverse(*v, a.last_transformed));
                }
            }
            Ok((id.clone(), state.inverse_series(id, &values, a)?))
        })
        .collect()
}
