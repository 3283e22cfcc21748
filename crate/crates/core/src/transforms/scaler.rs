use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ApplyTo;
use crate::data::{ExogKind, LongFrame, Series};
use crate::error::{Error, Result};

/// Standard deviations below this are replaced by 1 so constant series stay
/// finite.
pub const STD_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    /// Population mean and standard deviation, with the clamp applied.
    pub fn of(values: &[f64]) -> Moments {
        if values.is_empty() {
            return Moments { mean: 0.0, std: 1.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        Moments {
            mean,
            std: if std < STD_CLAMP { 1.0 } else { std },
        }
    }

    pub fn scale(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn unscale(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Statistics for one series (or the pooled set): the target plus each
/// exogenous column (`None` for untouched columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMoments {
    pub target: Option<Moments>,
    pub exog: Vec<Option<Moments>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub apply_to: ApplyTo,
    pub pooled: Option<SeriesMoments>,
    pub per_series: BTreeMap<String, SeriesMoments>,
}

impl ScalerParams {
    /// Fits on every point of `frame` (the training range).
    pub fn fit(frame: &LongFrame, apply_to: ApplyTo, pooled: bool) -> ScalerParams {
        let real: Vec<bool> = frame
            .exogenous()
            .iter()
            .map(|c| c.kind == ExogKind::Real && apply_to.features())
            .collect();
        let moments_of = |series: &[&Series]| SeriesMoments {
            target: apply_to.target().then(|| {
                let all: Vec<f64> = series.iter().flat_map(|s| s.values.iter().copied()).collect();
                Moments::of(&all)
            }),
            exog: real
                .iter()
                .enumerate()
                .map(|(c, &on)| {
                    on.then(|| {
                        let all: Vec<f64> =
                            series.iter().flat_map(|s| s.exog[c].iter().copied()).collect();
                        Moments::of(&all)
                    })
                })
                .collect(),
        };
        if pooled {
            let all: Vec<&Series> = frame.series().iter().collect();
            ScalerParams {
                apply_to,
                pooled: Some(moments_of(&all)),
                per_series: BTreeMap::new(),
            }
        } else {
            ScalerParams {
                apply_to,
                pooled: None,
                per_series: frame
                    .series()
                    .iter()
                    .map(|s| (s.id.clone(), moments_of(&[s])))
                    .collect(),
            }
        }
    }

    pub fn lookup(&self, series_id: &str) -> Result<&SeriesMoments> {
        match &self.pooled {
            Some(m) => Ok(m),
            None => self
                .per_series
                .get(series_id)
                .ok_or_else(|| Error::UnknownSeries(series_id.to_string())),
        }
    }

    pub fn apply(&self, frame: &LongFrame) -> Result<LongFrame> {
        frame.map_series(|s| {
            let m = self.lookup(&s.id)?;
            Ok(map_series(s, m, Moments::scale))
        })
    }

    pub fn invert(&self, frame: &LongFrame) -> Result<LongFrame> {
        frame.map_series(|s| {
            let m = self.lookup(&s.id)?;
            Ok(map_series(s, m, Moments::unscale))
        })
    }
}

fn map_series(s: &Series, m: &SeriesMoments, f: fn(&Moments, f64) -> f64) -> Series {
    let mut out = s.clone();
    if let Some(t) = &m.target {
        out.values.iter_mut().for_each(|v| *v = f(t, *v));
    }
    for (col, mom) in out.exog.iter_mut().zip(&m.exog) {
        if let Some(mom) = mom {
            col.iter_mut().for_each(|v| *v = f(mom, *v));
        }
    }
    out
}

/// Scales `frame` per series with statistics computed on `fit_on`.
pub fn standard_scale(frame: &LongFrame, fit_on: &LongFrame) -> Result<(LongFrame, ScalerParams)> {
    let params = ScalerParams::fit(fit_on, ApplyTo::Target, false);
    Ok((params.apply(frame)?, params))
}

pub fn standard_inverse(frame: &LongFrame, params: &ScalerParams) -> Result<LongFrame> {
    params.invert(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Frequency;

    fn frame(values: Vec<f64>) -> LongFrame {
        LongFrame::from_values(Frequency::ordinal(1), [("a", values)]).unwrap()
    }

    #[test]
    fn scales_with_population_std() {
        let f = frame(vec![1.0, 2.0, 3.0]);
        let (scaled, _) = standard_scale(&f, &f).unwrap();
        // mean 2, std sqrt(2/3)
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (v, e) in scaled.series()[0].values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
    }

    #[test]
    fn constant_series_is_clamped() {
        let f = frame(vec![5.0, 5.0, 5.0]);
        let (scaled, params) = standard_scale(&f, &f).unwrap();
        assert_eq!(scaled.series()[0].values, vec![0.0, 0.0, 0.0]);
        assert_eq!(params.per_series["a"].target.unwrap().std, 1.0);
    }

    #[test]
    fn round_trip() {
        let f = frame(vec![3.5, -1.0, 8.25, 0.0, 2.0]);
        let (scaled, params) = standard_scale(&f, &f).unwrap();
        let back = standard_inverse(&scaled, &params).unwrap();
        for (a, b) in back.series()[0].values.iter().zip(&f.series()[0].values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn statistics_come_from_fit_range_only() {
        let full = frame(vec![1.0, 2.0, 3.0, 100.0]);
        let train = full.truncate_each(|n| n - 1);
        let (scaled, _) = standard_scale(&full, &train).unwrap();
        assert_eq!(scaled.series()[0].values[1], 0.0);
    }

    #[test]
    fn unknown_series_is_rejected() {
        let params = ScalerParams::fit(&frame(vec![1.0, 2.0]), ApplyTo::Target, false);
        let other = LongFrame::from_values(Frequency::ordinal(1), [("zz", vec![1.0])]).unwrap();
        assert!(matches!(params.apply(&other), Err(Error::UnknownSeries(_))));
        let pooled = ScalerParams::fit(&frame(vec![1.0, 2.0]), ApplyTo::Target, true);
        assert!(pooled.apply(&other).is_ok());
    }
}
