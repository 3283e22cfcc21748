use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::LongFrame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum CvScheme {
    /// Every fold trains from the start of the series.
    #[default]
    Expanding,
    /// Every fold trains on the last `window` points before its end.
    Rolling { window: usize },
}

/// Fold `index` trains on everything up to `holdout` points before each
/// series' end and validates on the following `horizon` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub holdout: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub scheme: CvScheme,
    pub horizon: usize,
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// 0-based training range of a series of length `len`.
    pub fn train_range(&self, fold: &Fold, len: usize) -> Range<usize> {
        let end = len - fold.holdout;
        match self.scheme {
            CvScheme::Expanding => 0..end,
            CvScheme::Rolling { window } => end.saturating_sub(window)..end,
        }
    }

    /// 0-based validation range of a series of length `len`.
    pub fn validation_range(&self, fold: &Fold, len: usize) -> Range<usize> {
        let end = len - fold.holdout;
        end..end + self.horizon
    }

    pub fn train_frame(&self, frame: &LongFrame, fold: &Fold) -> Result<LongFrame> {
        frame.map_series(|s| Ok(s.slice(self.train_range(fold, s.len()))))
    }

    /// Training range followed by the validation range.
    pub fn extended_frame(&self, frame: &LongFrame, fold: &Fold) -> Result<LongFrame> {
        frame.map_series(|s| {
            let start = self.train_range(fold, s.len()).start;
            Ok(s.slice(start..self.validation_range(fold, s.len()).end))
        })
    }
}

/// Rolling-origin folds counted back from each series' end: fold `k` of
/// `n_folds` trains up to `T - (n_folds - k) * H`.
pub fn make_cv_splits(
    frame: &LongFrame,
    scheme: CvScheme,
    n_folds: usize,
    horizon: usize,
    history: usize,
) -> Result<SplitPlan> {
    if horizon == 0 {
        return Err(Error::Constraint("horizon must be positive".into()));
    }
    if let CvScheme::Rolling { window } = scheme {
        if window < history + 1 {
            return Err(Error::Constraint(format!(
                "rolling window {window} must exceed the history length {history}"
            )));
        }
    }
    let required = history + n_folds * horizon;
    let shortest = frame.min_len();
    if n_folds > 0 && shortest < required {
        return Err(Error::TooShortForFolds {
            folds: n_folds,
            length: shortest,
            required,
        });
    }
    Ok(SplitPlan {
        scheme,
        horizon,
        folds: (0..n_folds)
            .map(|k| Fold {
                index: k,
                holdout: (n_folds - k) * horizon,
            })
            .collect(),
    })
}
