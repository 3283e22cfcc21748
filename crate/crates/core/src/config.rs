//! Run configuration: one JSON document describing the dataset, the
//! experiment grid, validation and output.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{load_long_csv, CsvOptions, Frequency, LongFrame, RoleMap};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::strategies::{Mode, StrategyKind, StrategySpec};
use crate::transforms::{DatePart, HorizonEncoding, IdEncoding, PipelineConfig, TransformSpec};
use crate::validation::{CvScheme, CvSettings};

pub const DEFAULT_HISTORY: usize = 96;
pub const DEFAULT_HORIZON: usize = 24;

fn default_history() -> usize {
    DEFAULT_HISTORY
}
fn default_horizon() -> usize {
    DEFAULT_HORIZON
}
fn default_delimiter() -> char {
    ','
}
fn default_folds() -> usize {
    3
}
fn default_false() -> Vec<bool> {
    vec![false]
}
fn default_modes() -> Vec<Mode> {
    vec![Mode::Global]
}
fn default_models() -> Vec<ModelSpec> {
    vec![ModelSpec::ridge(1.0)]
}
fn default_preprocessings() -> Vec<NamedPipeline> {
    vec![NamedPipeline {
        name: "none".into(),
        steps: vec![TransformSpec::Lag {
            history: None,
            exogenous: true,
        }],
    }]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("stratcast-out")
}
fn default_date_parts() -> Vec<DatePart> {
    vec![DatePart::Month, DatePart::Weekday]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// CSV path; relative paths are resolved against the config file.
    pub path: PathBuf,
    pub roles: RoleMap,
    pub frequency: Frequency,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

/// A labelled preprocessing pipeline. The lag step's history defaults to
/// the run-level `history`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPipeline {
    pub name: String,
    pub steps: Vec<TransformSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyEntry {
    pub kind: StrategyKind,
    /// Defaults to 1 for recursive and direct, `horizon` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_encoding: Option<HorizonEncoding>,
}

impl StrategyEntry {
    pub fn spec(&self, horizon: usize) -> Result<StrategySpec> {
        let mh = self.model_horizon.unwrap_or(match self.kind {
            StrategyKind::Recursive | StrategyKind::Direct => 1,
            StrategyKind::Mimo | StrategyKind::FlatWideMimo => horizon,
        });
        let spec = StrategySpec {
            kind: self.kind,
            horizon,
            model_horizon: mh,
            horizon_encoding: self.horizon_encoding.unwrap_or_default(),
        };
        spec.validate().map_err(|e| Error::Constraint(e.to_string()))?;
        Ok(spec)
    }
}

/// Grid dimensions for the optional calendar and series-id features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureGrid {
    #[serde(default = "default_false")]
    pub datetime: Vec<bool>,
    #[serde(default = "default_false")]
    pub id: Vec<bool>,
    #[serde(default = "default_date_parts")]
    pub datetime_parts: Vec<DatePart>,
    #[serde(default)]
    pub id_encoding: IdEncoding,
}

impl Default for FeatureGrid {
    fn default() -> Self {
        FeatureGrid {
            datetime: default_false(),
            id: default_false(),
            datetime_parts: default_date_parts(),
            id_encoding: IdEncoding::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Expanding,
    Rolling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestConfig {
    pub windows: usize,
    /// Defaults to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default)]
    pub scheme: SchemeName,
    /// Training window for the rolling scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backtest: Option<BacktestConfig>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            scheme: SchemeName::Expanding,
            window: None,
            folds: default_folds(),
            backtest: None,
        }
    }
}

impl ValidationConfig {
    pub fn cv(&self) -> Result<CvSettings> {
        let scheme = match (self.scheme, self.window) {
            (SchemeName::Expanding, None) => CvScheme::Expanding,
            (SchemeName::Rolling, Some(window)) => CvScheme::Rolling { window },
            (SchemeName::Expanding, Some(_)) => {
                return Err(Error::Constraint("validation.window only applies to the rolling scheme".into()))
            }
            (SchemeName::Rolling, None) => {
                return Err(Error::Constraint("the rolling scheme needs validation.window".into()))
            }
        };
        Ok(CvSettings {
            scheme,
            folds: self.folds,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default = "default_history")]
    pub history: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_preprocessings")]
    pub preprocessings: Vec<NamedPipeline>,
    pub strategies: Vec<StrategyEntry>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub features: FeatureGrid,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Directory the config was read from; not part of the document.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A fully resolved experiment cell description, before data is seen.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessingVariant {
    pub name: String,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    /// Parses and validates a config document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Schema {
                path,
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        let c = |m: String| Err(Error::Constraint(m));
        if self.history == 0 || self.horizon == 0 {
            return c("history and horizon must be positive".into());
        }
        for (name, empty) in [
            ("preprocessings", self.preprocessings.is_empty()),
            ("strategies", self.strategies.is_empty()),
            ("modes", self.modes.is_empty()),
            ("models", self.models.is_empty()),
            ("features.datetime", self.features.datetime.is_empty()),
            ("features.id", self.features.id.is_empty()),
        ] {
            if empty {
                return c(format!("grid `{name}` must not be empty"));
            }
        }
        if self.features.datetime.contains(&true) && self.features.datetime_parts.is_empty() {
            return c("features.datetime_parts must not be empty when datetime features are on".into());
        }
        let mut names = BTreeSet::new();
        for p in &self.preprocessings {
            if !names.insert(p.name.as_str()) {
                return c(format!("duplicate preprocessing name `{}`", p.name));
            }
            let has_feature_step = p.steps.iter().any(|s| {
                matches!(s, TransformSpec::DatetimeFeatures { .. } | TransformSpec::IdFeatures { .. })
            });
            if has_feature_step {
                return c(format!(
                    "preprocessing `{}`: datetime and id features are set through the `features` grid",
                    p.name
                ));
            }
            PipelineConfig::new(p.steps.clone())
                .map_err(|e| Error::Constraint(format!("preprocessing `{}`: {e}", p.name)))?;
        }
        for s in &self.strategies {
            s.spec(self.horizon)?;
        }
        for m in &self.models {
            m.validate().map_err(|e| Error::Constraint(e.to_string()))?;
        }
        if let Some(ModelSpec::SeasonalNaive { period }) =
            self.models.iter().find(|m| matches!(m, ModelSpec::SeasonalNaive { period } if *period > self.history))
        {
            return c(format!("seasonal period {period} exceeds history {}", self.history));
        }
        self.validation.cv()?;
        if let Some(b) = self.validation.backtest {
            if b.windows == 0 || b.stride == Some(0) {
                return c("backtest windows and stride must be positive".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring `seed` and `output_dir`.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("seed");
            map.remove("output_dir");
        }
        // serde_json maps are ordered by key, so this is canonical
        let text = serde_json::to_string(&v).expect("value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn dataset_path(&self) -> PathBuf {
        if self.dataset.path.is_absolute() {
            self.dataset.path.clone()
        } else {
            self.base_dir.join(&self.dataset.path)
        }
    }

    pub fn load_dataset(&self) -> Result<LongFrame> {
        let delimiter = u8::try_from(self.dataset.delimiter)
            .map_err(|_| Error::Constraint("dataset.delimiter must be a single ASCII character".into()))?;
        load_long_csv(
            self.dataset_path(),
            &self.dataset.roles,
            self.dataset.frequency,
            CsvOptions { delimiter },
        )
    }

    pub fn strategy_specs(&self) -> Result<Vec<StrategySpec>> {
        self.strategies.iter().map(|s| s.spec(self.horizon)).collect()
    }

    /// The preprocessing with its lag history filled in and the requested
    /// calendar / id feature steps inserted before the lag.
    pub fn pipeline(&self, pre: &NamedPipeline, datetime: bool, id: bool) -> Result<PipelineConfig> {
        let mut p = PipelineConfig::new(pre.steps.clone())?.with_default_history(self.history);
        if datetime {
            p = p.with_step_before_lag(TransformSpec::DatetimeFeatures {
                parts: self.features.datetime_parts.clone(),
                lags: 1,
            })?;
        }
        if id {
            p = p.with_step_before_lag(TransformSpec::IdFeatures {
                encoding: self.features.id_encoding,
            })?;
        }
        Ok(p)
    }

    /// Labels for the model grid: the kind name, suffixed with the grid
    /// position when a kind appears more than once.
    pub fn model_labels(&self) -> Vec<String> {
        self.models
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let dup = self.models.iter().filter(|o| o.name() == m.name()).count() > 1;
                if dup {
                    format!("{}#{i}", m.name())
                } else {
                    m.name().to_string()
                }
            })
            .collect()
    }

    pub fn backtest_stride(&self) -> usize {
        self.validation.backtest.and_then(|b| b.stride).unwrap_or(self.horizon)
    }
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = RunConfig::from_json(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

/// Display label of a strategy, e.g. `recursive(MH=6)`.
pub fn strategy_label(s: &StrategySpec) -> String {
    match s.kind {
        StrategyKind::Recursive | StrategyKind::Direct => format!("{}(MH={})", s.kind, s.model_horizon),
        StrategyKind::FlatWideMimo if s.horizon_encoding == HorizonEncoding::Onehot => {
            format!("{}(onehot)", s.kind)
        }
        _ => s.kind.to_string(),
    }
}
