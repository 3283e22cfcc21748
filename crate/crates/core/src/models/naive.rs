use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::transforms::{ColumnMeta, ColumnRole, HorizonEncoding, TargetMeta};

/// Where one output reads its value from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveOutput {
    /// Target-lag columns of the output's channel, indexed by lag.
    pub lag_columns: Vec<usize>,
    /// Absolute horizon step; `None` reads it from the horizon column.
    pub step: Option<usize>,
}

/// Persistence (`period = 1`) and seasonal-naive baselines. Output at
/// horizon step `s` repeats the value `(period - 1 - s) mod period` lags
/// back, continuing the last observed cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveModel {
    pub period: usize,
    pub n_features: usize,
    pub outputs: Vec<NaiveOutput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<(HorizonEncoding, Vec<usize>)>,
}

pub fn fit_naive(columns: &[ColumnMeta], targets: &[TargetMeta], period: usize) -> Result<NaiveModel> {
    if period == 0 {
        return Err(Error::InvalidModelSpec("seasonal period must be at least 1".into()));
    }
    let outputs = targets
        .iter()
        .map(|t| {
            let lag_columns = (0..period)
                .map(|lag| {
                    columns
                        .iter()
                        .position(|c| {
                            c.role == ColumnRole::TargetLag && c.channel == Some(t.channel) && c.lag == Some(lag)
                        })
                        .ok_or_else(|| {
                            let available = columns
                                .iter()
                                .filter(|c| c.role == ColumnRole::TargetLag && c.channel == Some(t.channel))
                                .count();
                            Error::InsufficientLags {
                                available,
                                required: period,
                            }
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(NaiveOutput {
                lag_columns,
                step: t.step,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon_cols: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.role == ColumnRole::HorizonIndex)
        .map(|(i, _)| i)
        .collect();
    let horizon = match horizon_cols.len() {
        0 => None,
        1 => Some((HorizonEncoding::Raw, horizon_cols)),
        _ => Some((HorizonEncoding::Onehot, horizon_cols)),
    };
    if horizon.is_none() && outputs.iter().any(|o| o.step.is_none()) {
        return Err(Error::InvalidModelSpec("flat-wide targets need a horizon column".into()));
    }
    Ok(NaiveModel {
        period,
        n_features: columns.len(),
        outputs,
        horizon,
    })
}

impl NaiveModel {
    fn step_of_row(&self, row: &[f64]) -> usize {
        match &self.horizon {
            Some((HorizonEncoding::Raw, cols)) => (row[cols[0]].round().max(1.0) as usize) - 1,
            Some((HorizonEncoding::Onehot, cols)) => cols.iter().position(|&c| row[c] == 1.0).unwrap_or(0),
            None => 0,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.cols(),
            });
        }
        let mut out = Matrix::zeros(x.rows(), self.outputs.len());
        for (r, row) in x.iter_rows().enumerate() {
            for (j, o) in self.outputs.iter().enumerate() {
                let step = o.step.unwrap_or_else(|| self.step_of_row(row));
                let lag = (self.period - 1 - step % self.period) % self.period;
                out.set(r, j, row[o.lag_columns[lag]]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Frequency, LongFrame};
    use crate::transforms::make_lag_matrix;

    #[test]
    fn persistence_repeats_lag0() {
        let f = LongFrame::from_values(Frequency::ordinal(1), [("a", vec![1.0, 4.0, 7.0, 0.0, 0.0, 0.0])])
            .unwrap();
        let m = make_lag_matrix(&f, 3, 3).unwrap();
        let model = fit_naive(&m.columns, &m.targets, 1).unwrap();
        let p = model.predict(&m.x).unwrap();
        assert_eq!(p.row(0), &[7.0, 7.0, 7.0]);
    }

    #[test]
    fn seasonal_continues_the_cycle() {
        let f = LongFrame::from_values(Frequency::ordinal(1), [("a", vec![5.0, 1.0, 2.0, 0.0, 0.0])]).unwrap();
        let m = make_lag_matrix(&f, 3, 2).unwrap();
        let model = fit_naive(&m.columns, &m.targets, 2).unwrap();
        // window [5, a=1, b=2]
        assert_eq!(model.predict(&m.x).unwrap().row(0), &[1.0, 2.0]);
    }

    #[test]
    fn period_longer_than_window() {
        let f = LongFrame::from_values(Frequency::ordinal(1), [("a", vec![1.0; 5])]).unwrap();
        let m = make_lag_matrix(&f, 2, 1).unwrap();
        assert!(matches!(
            fit_naive(&m.columns, &m.targets, 3),
            Err(Error::InsufficientLags { available: 2, required: 3 })
        ));
    }
}
