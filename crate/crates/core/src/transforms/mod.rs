//! Ordered, invertible preprocessing.
//!
//! Transforms fall into three groups, applied in this order:
//!
//! 1. series-to-series: [`standard_scale`], [`difference_normalize`] and the
//!    feature generators ([`make_datetime_features`], [`make_id_features`]);
//! 2. series-to-features: the lag transform ([`make_lag_matrix`]) that turns
//!    long series into a wide sample matrix;
//! 3. features-to-features: [`last_known_normalize`], which rescales each
//!    wide row by its most recent observed target value.
//!
//! [`PipelineState`] holds a fitted chain and knows how to map predictions
//! back to original units.

mod calendar;
mod difference;
mod ids;
mod lag;
mod lkn;
mod pipeline;
mod scaler;

use serde::{Deserialize, Serialize};

pub use self::calendar::{make_datetime_features, DatePart};
pub use self::difference::{difference_inverse, difference_normalize, DifferenceAnchor};
pub use self::ids::{make_id_features, IdEncoding, IdVocabulary};
pub use self::lag::{
    make_lag_matrix, ChannelWindow, ColumnMeta, ColumnRole, FeatureMatrix, FeatureSchema,
    GroupWindow, HorizonEncoding, RowAnchor, TargetMeta,
};
pub use self::lkn::{
    last_known_denormalize, last_known_normalize, last_known_normalize_with, lkn_inverse_value,
};
pub(crate) use self::lkn::LknPlan;
pub use self::pipeline::{
    inverse_pipeline, PipelineState, PredictionAnchors, SeriesAnchors, StepAnchor,
};
pub use self::scaler::{standard_inverse, standard_scale, Moments, ScalerParams};
use crate::error::{Error, Result};

/// Delta subtracts the reference value, ratio divides by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Delta,
    Ratio,
}

impl NormMode {
    pub fn forward(self, v: f64, reference: f64) -> f64 {
        match self {
            NormMode::Delta => v - reference,
            NormMode::Ratio => v / reference,
        }
    }

    pub fn inverse(self, v: f64, reference: f64) -> f64 {
        match self {
            NormMode::Delta => v + reference,
            NormMode::Ratio => v * reference,
        }
    }
}

/// Which columns a transform touches: the target series, the real-valued
/// exogenous columns, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyTo {
    #[default]
    Target,
    Features,
    Both,
}

impl ApplyTo {
    pub fn target(self) -> bool {
        matches!(self, ApplyTo::Target | ApplyTo::Both)
    }

    pub fn features(self) -> bool {
        matches!(self, ApplyTo::Features | ApplyTo::Both)
    }
}

fn default_lags() -> usize {
    1
}

/// One declarative pipeline step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSpec {
    StandardScaler {
        #[serde(default)]
        apply_to: ApplyTo,
        /// One set of statistics for all series instead of per-series.
        #[serde(default)]
        pooled: bool,
    },
    DifferenceNormalizer {
        mode: NormMode,
        #[serde(default)]
        apply_to: ApplyTo,
    },
    DatetimeFeatures {
        parts: Vec<DatePart>,
        /// Number of lagged copies (lag 0 .. lags-1) of each part.
        #[serde(default = "default_lags")]
        lags: usize,
    },
    IdFeatures {
        #[serde(default)]
        encoding: IdEncoding,
    },
    Lag {
        /// Window length; falls back to the run-level history when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        history: Option<usize>,
        /// Include lags of the exogenous columns in every row.
        #[serde(default = "default_true")]
        exogenous: bool,
    },
    LastKnownNormalizer {
        mode: NormMode,
        #[serde(default)]
        apply_to: ApplyTo,
    },
}

fn default_true() -> bool {
    true
}

impl TransformSpec {
    pub fn standard_scaler() -> Self {
        TransformSpec::StandardScaler {
            apply_to: ApplyTo::Target,
            pooled: false,
        }
    }

    pub fn difference(mode: NormMode) -> Self {
        TransformSpec::DifferenceNormalizer {
            mode,
            apply_to: ApplyTo::Target,
        }
    }

    pub fn lag(history: usize) -> Self {
        TransformSpec::Lag {
            history: Some(history),
            exogenous: true,
        }
    }

    pub fn last_known(mode: NormMode) -> Self {
        TransformSpec::LastKnownNormalizer {
            mode,
            apply_to: ApplyTo::Target,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            TransformSpec::StandardScaler { .. } => "standard_scaler",
            TransformSpec::DifferenceNormalizer { .. } => "difference_normalizer",
            TransformSpec::DatetimeFeatures { .. } => "datetime_features",
            TransformSpec::IdFeatures { .. } => "id_features",
            TransformSpec::Lag { .. } => "lag",
            TransformSpec::LastKnownNormalizer { .. } => "last_known_normalizer",
        }
    }
}

/// An ordered transform list. Construction checks the ordering rules:
/// exactly one lag step, series-level steps before it, the last-known
/// normalizer after it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PipelineConfig {
    steps: Vec<TransformSpec>,
}

impl PipelineConfig {
    pub fn new(steps: Vec<TransformSpec>) -> Result<Self> {
        let lag_positions: Vec<usize> = steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, TransformSpec::Lag { .. }))
            .map(|(i, _)| i)
            .collect();
        if lag_positions.len() != 1 {
            return Err(Error::InvalidPipeline(format!(
                "expected exactly one lag step, found {}",
                lag_positions.len()
            )));
        }
        let lag_at = lag_positions[0];
        let mut lkn_seen = 0;
        for (i, step) in steps.iter().enumerate() {
            match step {
                TransformSpec::Lag { history, .. } => {
                    if *history == Some(0) {
                        return Err(Error::InvalidPipeline("lag history must be positive".into()));
                    }
                }
                TransformSpec::LastKnownNormalizer { .. } => {
                    lkn_seen += 1;
                    if i < lag_at {
                        return Err(Error::InvalidPipeline(
                            "last_known_normalizer must come after the lag step".into(),
                        ));
                    }
                }
                TransformSpec::DatetimeFeatures { lags, .. } if *lags == 0 => {
                    return Err(Error::InvalidPipeline(
                        "datetime_features lags must be at least 1".into(),
                    ));
                }
                other if i > lag_at => {
                    return Err(Error::InvalidPipeline(format!(
                        "{} must come before the lag step",
                        other.name()
                    )));
                }
                _ => {}
            }
        }
        if lkn_seen > 1 {
            return Err(Error::InvalidPipeline(
                "at most one last_known_normalizer is allowed".into(),
            ));
        }
        let ids = steps
            .iter()
            .filter(|s| matches!(s, TransformSpec::IdFeatures { .. }))
            .count();
        let dts = steps
            .iter()
            .filter(|s| matches!(s, TransformSpec::DatetimeFeatures { .. }))
            .count();
        if ids > 1 || dts > 1 {
            return Err(Error::InvalidPipeline(
                "id_features and datetime_features may each appear once".into(),
            ));
        }
        Ok(PipelineConfig { steps })
    }

    /// `lag(history)` only.
    pub fn identity(history: usize) -> Self {
        PipelineConfig {
            steps: vec![TransformSpec::lag(history)],
        }
    }

    pub fn steps(&self) -> &[TransformSpec] {
        &self.steps
    }

    /// Fills an unset lag history with `default`.
    pub fn with_default_history(mut self, default: usize) -> Self {
        for s in &mut self.steps {
            if let TransformSpec::Lag { history, .. } = s {
                history.get_or_insert(default);
            }
        }
        self
    }

    pub fn history(&self) -> Option<usize> {
        self.steps.iter().find_map(|s| match s {
            TransformSpec::Lag { history, .. } => *history,
            _ => None,
        })
    }

    pub fn has_datetime_features(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, TransformSpec::DatetimeFeatures { parts, .. } if !parts.is_empty()))
    }

    pub fn has_id_features(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, TransformSpec::IdFeatures { .. }))
    }

    pub fn differenced(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s, TransformSpec::DifferenceNormalizer { .. }))
    }

    /// Copy with an extra series-level step inserted just before the lag.
    pub fn with_step_before_lag(&self, step: TransformSpec) -> Result<Self> {
        let mut steps = self.steps.clone();
        let at = steps
            .iter()
            .position(|s| matches!(s, TransformSpec::Lag { .. }))
            .unwrap_or(steps.len());
        steps.insert(at, step);
        PipelineConfig::new(steps)
    }
}

impl<'de> Deserialize<'de> for PipelineConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let steps = Vec::<TransformSpec>::deserialize(d)?;
        PipelineConfig::new(steps).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_rules() {
        use TransformSpec as T;
        assert!(PipelineConfig::new(vec![T::standard_scaler(), T::lag(3), T::last_known(NormMode::Delta)]).is_ok());
        assert!(PipelineConfig::new(vec![T::standard_scaler()]).is_err());
        assert!(PipelineConfig::new(vec![T::lag(3), T::lag(3)]).is_err());
        assert!(PipelineConfig::new(vec![T::last_known(NormMode::Delta), T::lag(3)]).is_err());
        assert!(PipelineConfig::new(vec![T::lag(3), T::standard_scaler()]).is_err());
        assert!(PipelineConfig::new(vec![T::lag(3), T::difference(NormMode::Delta)]).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let s: TransformSpec =
            serde_json::from_str(r#"{"kind":"last_known_normalizer","mode":"ratio"}"#).unwrap();
        assert_eq!(s, TransformSpec::last_known(NormMode::Ratio));
        let bad = serde_json::from_str::<TransformSpec>(r#"{"kind":"lag","histroy":3}"#);
        assert!(bad.is_err());
        let ok: PipelineConfig =
            serde_json::from_str(r#"[{"kind":"standard_scaler"},{"kind":"lag"}]"#).unwrap();
        assert_eq!(ok.history(), None);
        assert_eq!(ok.with_default_history(96).history(), Some(96));
        assert!(serde_json::from_str::<PipelineConfig>(r#"[{"kind":"standard_scaler"}]"#).is_err());
    }
}
