//! Multi-step-ahead strategies and dataset shaping.
//!
//! [`build_strategy_dataset`] turns a frame into the training matrices a
//! strategy needs, [`fit_forecaster`] fits the models, and
//! [`Forecaster::forecast`] produces `H` values per series in original
//! units.

mod dataset;
mod forecaster;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::dataset::{build_strategy_dataset, flatten_horizon, StrategyDataset};
pub use self::forecaster::{
    fit_forecaster, fit_forecaster_with, forecast_batch, forecast_recursive, Forecast, Forecaster,
    SeriesForecast,
};
use crate::error::{Error, Result};
use crate::transforms::HorizonEncoding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Recursive,
    Direct,
    Mimo,
    FlatWideMimo,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Recursive => "recursive",
            StrategyKind::Direct => "direct",
            StrategyKind::Mimo => "mimo",
            StrategyKind::FlatWideMimo => "flat_wide_mimo",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Strategy kind with horizon `H` and model horizon `MH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub horizon: usize,
    pub model_horizon: usize,
    /// Horizon-index feature encoding (flat-wide MIMO only).
    #[serde(default)]
    pub horizon_encoding: HorizonEncoding,
}

impl StrategySpec {
    /// Validated spec.
    pub fn new(kind: StrategyKind, horizon: usize, model_horizon: usize) -> Result<Self> {
        let spec = StrategySpec {
            kind,
            horizon,
            model_horizon,
            horizon_encoding: HorizonEncoding::Raw,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn recursive(horizon: usize, model_horizon: usize) -> Result<Self> {
        Self::new(StrategyKind::Recursive, horizon, model_horizon)
    }

    pub fn direct(horizon: usize, model_horizon: usize) -> Result<Self> {
        Self::new(StrategyKind::Direct, horizon, model_horizon)
    }

    pub fn mimo(horizon: usize) -> Result<Self> {
        Self::new(StrategyKind::Mimo, horizon, horizon)
    }

    pub fn flat_wide_mimo(horizon: usize) -> Result<Self> {
        Self::new(StrategyKind::FlatWideMimo, horizon, horizon)
    }

    pub fn with_horizon_encoding(mut self, encoding: HorizonEncoding) -> Self {
        self.horizon_encoding = encoding;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (h, mh) = (self.horizon, self.model_horizon);
        let bad = |m: String| Err(Error::InvalidStrategySpec(m));
        if h == 0 || mh == 0 {
            return bad("horizon and model horizon must be positive".into());
        }
        if mh > h {
            return bad(format!("model horizon {mh} exceeds horizon {h}"));
        }
        match self.kind {
            StrategyKind::Mimo | StrategyKind::FlatWideMimo if mh != h => {
                bad(format!("{} needs model horizon == horizon ({h}), got {mh}", self.kind))
            }
            StrategyKind::Direct if h % mh != 0 => {
                bad(format!("direct needs horizon {h} divisible by model horizon {mh}"))
            }
            _ => Ok(()),
        }
    }

    /// Number of models to fit.
    pub fn n_models(&self) -> usize {
        match self.kind {
            StrategyKind::Direct => self.horizon / self.model_horizon,
            _ => 1,
        }
    }

    /// Model calls per forecast for recursive strategies.
    pub fn n_iterations(&self) -> usize {
        match self.kind {
            StrategyKind::Recursive => self.horizon.div_ceil(self.model_horizon),
            _ => 1,
        }
    }

    /// Target steps a training row must cover.
    pub fn row_width(&self) -> usize {
        match self.kind {
            StrategyKind::Recursive => self.model_horizon,
            _ => self.horizon,
        }
    }
}

/// How series are combined into samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One model over pooled per-series rows.
    Global,
    /// One row per aligned window holding every series (channel mixing).
    #[serde(alias = "multivariate")]
    MultivariateCm,
    /// Channel independence. For the classical models here this is the
    /// global layout, restricted to aligned data.
    MultivariateCi,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Global => "global",
            Mode::MultivariateCm => "multivariate_cm",
            Mode::MultivariateCi => "multivariate_ci",
        }
    }

    pub fn requires_alignment(self) -> bool {
        self != Mode::Global
    }

    /// Whether rows span all series at once.
    pub fn mixes_channels(self) -> bool {
        self == Mode::MultivariateCm
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_invariants() {
        assert!(StrategySpec::new(StrategyKind::Mimo, 24, 6).is_err());
        assert!(StrategySpec::new(StrategyKind::FlatWideMimo, 24, 12).is_err());
        assert!(StrategySpec::direct(24, 7).is_err());
        assert_eq!(StrategySpec::direct(24, 6).unwrap().n_models(), 4);
        assert_eq!(StrategySpec::recursive(24, 6).unwrap().n_iterations(), 4);
        assert_eq!(StrategySpec::recursive(10, 4).unwrap().n_iterations(), 3);
        assert!(StrategySpec::recursive(4, 6).is_err());
    }

    #[test]
    fn mode_names() {
        let m: Mode = serde_json::from_str("\"multivariate\"").unwrap();
        assert_eq!(m, Mode::MultivariateCm);
        assert_eq!(serde_json::to_string(&m).unwrap(), "\"multivariate_cm\"");
    }
}
