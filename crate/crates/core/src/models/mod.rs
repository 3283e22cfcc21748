//! Regressors behind a small pluggable interface.
//!
//! A [`Learner`] turns a wide training table into a [`Predictor`]. The
//! built-in learners are described by [`ModelSpec`] and produce a
//! [`TrainedModel`], which can be saved and loaded as versioned JSON.
//! Custom learners only need to implement the two traits.

mod gbdt;
mod naive;
mod ridge;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use self::gbdt::{fit_gbdt, fit_gbdt_multi, Ensemble, GbdtModel, GbdtParams, Node, TrainingReport, Tree};
pub use self::naive::{fit_naive, NaiveModel, NaiveOutput};
pub use self::ridge::{fit_ridge, RidgeModel};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::transforms::{ColumnMeta, TargetMeta};

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Persistence,
    SeasonalNaive {
        period: usize,
    },
    Ridge {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    Gbdt(GbdtParams),
}

impl ModelSpec {
    pub fn ridge(lambda: f64) -> Self {
        ModelSpec::Ridge { lambda }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Persistence => "persistence",
            ModelSpec::SeasonalNaive { .. } => "seasonal_naive",
            ModelSpec::Ridge { .. } => "ridge",
            ModelSpec::Gbdt(_) => "gbdt",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Persistence => Ok(()),
            ModelSpec::SeasonalNaive { period } if *period == 0 => {
                Err(Error::InvalidModelSpec("seasonal period must be at least 1".into()))
            }
            ModelSpec::SeasonalNaive { .. } => Ok(()),
            ModelSpec::Ridge { lambda } if !lambda.is_finite() || *lambda < 0.0 => {
                Err(Error::InvalidModelSpec(format!("ridge lambda must be >= 0, got {lambda}")))
            }
            ModelSpec::Ridge { .. } => Ok(()),
            ModelSpec::Gbdt(p) => p.validate(),
        }
    }

    /// Copy with the random seed replaced (only GBDT draws random numbers).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ModelSpec::Gbdt(p) => ModelSpec::Gbdt(GbdtParams { seed, ..p.clone() }),
            other => other.clone(),
        }
    }
}

/// A wide training table with its column metadata.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub x: &'a Matrix,
    pub y: &'a Matrix,
    pub columns: &'a [ColumnMeta],
    pub targets: &'a [TargetMeta],
}

pub trait Predictor: Send + Sync + std::fmt::Debug {
    fn n_features(&self) -> usize;
    fn n_outputs(&self) -> usize;
    /// One output row per input row, in order.
    fn predict(&self, x: &Matrix) -> Result<Matrix>;
    /// The built-in representation, if this is one (used for saving).
    fn as_trained(&self) -> Option<&TrainedModel> {
        None
    }
}

pub trait Learner: Send + Sync {
    fn fit(&self, train: &TrainingData<'_>, valid: Option<&TrainingData<'_>>) -> Result<Arc<dyn Predictor>>;

    /// Whether `fit` makes use of a validation set (early stopping).
    fn uses_validation(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Naive(NaiveModel),
    Ridge(RidgeModel),
    Gbdt(GbdtModel),
}

/// Schema version written by [`TrainedModel::save`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    spec: ModelSpec,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn fit(spec: &ModelSpec, train: &TrainingData<'_>, valid: Option<&TrainingData<'_>>) -> Result<Self> {
        spec.validate()?;
        if train.x.rows() != train.y.rows() {
            return Err(Error::DimensionMismatch {
                expected: train.x.rows(),
                actual: train.y.rows(),
            });
        }
        Ok(match spec {
            ModelSpec::Persistence => TrainedModel::Naive(fit_naive(train.columns, train.targets, 1)?),
            ModelSpec::SeasonalNaive { period } => {
                TrainedModel::Naive(fit_naive(train.columns, train.targets, *period)?)
            }
            ModelSpec::Ridge { lambda } => TrainedModel::Ridge(fit_ridge(train.x, train.y, *lambda)?),
            ModelSpec::Gbdt(p) => {
                let v = valid.filter(|_| p.early_stopping_rounds.is_some()).map(|v| (v.x, v.y));
                TrainedModel::Gbdt(fit_gbdt_multi(train.x, train.y, p, v)?)
            }
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            TrainedModel::Naive(m) => m.predict(x),
            TrainedModel::Ridge(m) => m.predict(x),
            TrainedModel::Gbdt(m) => m.predict(x),
        }
    }

    /// Per-output boosting reports (empty for other models).
    pub fn reports(&self) -> Vec<&TrainingReport> {
        match self {
            TrainedModel::Gbdt(m) => m.ensembles.iter().map(|e| &e.report).collect(),
            _ => Vec::new(),
        }
    }

    pub fn to_json(&self, spec: &ModelSpec) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            spec: spec.clone(),
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::InvalidData(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<(ModelSpec, TrainedModel)> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: "model".into(),
            message: e.to_string(),
        })?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Schema {
                path: "format_version".into(),
                message: format!("unsupported model format version {}", file.format_version),
            });
        }
        Ok((file.spec, file.model))
    }

    pub fn save(&self, spec: &ModelSpec, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json(spec)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(ModelSpec, TrainedModel)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl Predictor for TrainedModel {
    fn n_features(&self) -> usize {
        match self {
            TrainedModel::Naive(m) => m.n_features,
            TrainedModel::Ridge(m) => m.n_features(),
            TrainedModel::Gbdt(m) => m.n_features,
        }
    }

    fn n_outputs(&self) -> usize {
        match self {
            TrainedModel::Naive(m) => m.outputs.len(),
            TrainedModel::Ridge(m) => m.n_outputs(),
            TrainedModel::Gbdt(m) => m.ensembles.len(),
        }
    }

    fn predict(&self, x: &Matrix) -> Result<Matrix> {
        TrainedModel::predict(self, x)
    }

    fn as_trained(&self) -> Option<&TrainedModel> {
        Some(self)
    }
}

impl Learner for ModelSpec {
    fn fit(&self, train: &TrainingData<'_>, valid: Option<&TrainingData<'_>>) -> Result<Arc<dyn Predictor>> {
        Ok(Arc::new(TrainedModel::fit(self, train, valid)?))
    }

    fn uses_validation(&self) -> bool {
        matches!(self, ModelSpec::Gbdt(p) if p.early_stopping_rounds.is_some())
    }
}
