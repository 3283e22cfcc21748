use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::LongFrame;
use crate::error::{Error, Result};
use crate::strategies::Forecast;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    /// Number of scored points.
    pub n: usize,
}

/// Mean absolute and mean squared error.
pub fn compute_metrics(pred: &[f64], truth: &[f64]) -> Result<Metrics> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidData("nothing to score".into()));
    }
    if let Some(i) = pred.iter().chain(truth).position(|v| !v.is_finite()) {
        let which = if i < pred.len() { "prediction" } else { "observation" };
        return Err(Error::InvalidData(format!("non-finite {which} in metrics input")));
    }
    let n = pred.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (p, y) in pred.iter().zip(truth) {
        let e = p - y;
        abs += e.abs();
        sq += e * e;
    }
    Ok(Metrics {
        mae: abs / n,
        mse: sq / n,
        n: pred.len(),
    })
}

/// Metrics pooled over every forecast point, plus per-series values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub pooled: Metrics,
    pub per_series: BTreeMap<String, Metrics>,
}

/// Scores a forecast against the observed values in `truth`, matched by
/// series id and timestamp.
pub fn score_forecast(forecast: &Forecast, truth: &LongFrame) -> Result<Score> {
    let mut all_pred = Vec::new();
    let mut all_truth = Vec::new();
    let mut per_series = BTreeMap::new();
    for s in &forecast.series {
        let obs = truth
            .get(&s.series_id)
            .ok_or_else(|| Error::UnknownSeries(s.series_id.clone()))?;
        let observed = s
            .timestamps
            .iter()
            .map(|t| {
                obs.timestamps
                    .binary_search(t)
                    .map(|i| obs.values[i])
                    .map_err(|_| Error::InvalidData(format!("no observation for `{}` at {t}", s.series_id)))
            })
            .collect::<Result<Vec<f64>>>()?;
        per_series.insert(s.series_id.clone(), compute_metrics(&s.values, &observed)?);
        all_pred.extend_from_slice(&s.values);
        all_truth.extend(observed);
    }
    Ok(Score {
        pooled: compute_metrics(&all_pred, &all_truth)?,
        per_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let m = compute_metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.mae, m.mse), (0.0, 0.0));
        let m = compute_metrics(&[1.0, 3.0], &[2.0, 2.0]).unwrap();
        assert_eq!((m.mae, m.mse), (1.0, 1.0));
        let m = compute_metrics(&[0.0], &[3.0]).unwrap();
        assert_eq!((m.mae, m.mse), (3.0, 9.0));
        assert!(matches!(compute_metrics(&[0.0], &[]), Err(Error::LengthMismatch { .. })));
    }
}
