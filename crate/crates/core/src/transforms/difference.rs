use serde::{Deserialize, Serialize};

use super::{ApplyTo, NormMode};
use crate::data::{ExogKind, LongFrame, Series};
use crate::error::{Error, Result};

/// What a differenced series needs to be reconstructed: the dropped first
/// point (for whole-series inversion) and the last point (to integrate
/// forecasts forward). Exogenous entries are `None` for untouched columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceAnchor {
    pub first_timestamp: i64,
    pub first_target: f64,
    pub last_target: f64,
    pub first_exog: Vec<Option<f64>>,
}

fn touched_columns(frame: &LongFrame, apply_to: ApplyTo) -> Vec<bool> {
    frame
        .exogenous()
        .iter()
        .map(|c| c.kind == ExogKind::Real && apply_to.features())
        .collect()
}

fn check_nonzero(s: &Series, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| *v == 0.0) {
        Some(i) => Err(Error::ZeroDivision {
            series: s.id.clone(),
            timestamp: s.timestamps[i],
        }),
        None => Ok(()),
    }
}

fn diff(values: &[f64], mode: NormMode) -> Vec<f64> {
    values.windows(2).map(|w| mode.forward(w[1], w[0])).collect()
}

/// Consecutive differences (delta) or ratios. The first point of every
/// series is dropped and kept in the returned anchors.
pub fn difference_normalize(
    frame: &LongFrame,
    mode: NormMode,
    apply_to: ApplyTo,
) -> Result<(LongFrame, Vec<DifferenceAnchor>)> {
    let touched = touched_columns(frame, apply_to);
    let mut anchors = Vec::with_capacity(frame.n_series());
    let out = frame.map_series(|s| {
        if s.len() < 2 {
            return Err(Error::SeriesTooShort {
                series: s.id.clone(),
                length: s.len(),
                required: 2,
            });
        }
        if mode == NormMode::Ratio {
            if apply_to.target() {
                check_nonzero(s, &s.values)?;
            }
            for (c, &on) in touched.iter().enumerate() {
                if on {
                    check_nonzero(s, &s.exog[c])?;
                }
            }
        }
        anchors.push(DifferenceAnchor {
            first_timestamp: s.timestamps[0],
            first_target: s.values[0],
            last_target: *s.values.last().unwrap(),
            first_exog: touched
                .iter()
                .enumerate()
                .map(|(c, &on)| on.then(|| s.exog[c][0]))
                .collect(),
        });
        Ok(Series {
            id: s.id.clone(),
            timestamps: s.timestamps[1..].to_vec(),
            values: if apply_to.target() {
                diff(&s.values, mode)
            } else {
                s.values[1..].to_vec()
            },
            exog: s
                .exog
                .iter()
                .zip(&touched)
                .map(|(col, &on)| if on { diff(col, mode) } else { col[1..].to_vec() })
                .collect(),
        })
    })?;
    Ok((out, anchors))
}

/// Integrates increments starting from `start` (cumulative sum or product).
pub(crate) fn integrate(start: f64, increments: &[f64], mode: NormMode) -> Vec<f64> {
    let mut level = start;
    increments
        .iter()
        .map(|d| {
            level = mode.inverse(*d, level);
            level
        })
        .collect()
}

/// Reconstructs the original frame from a differenced one and its anchors
/// (one per series, in frame order).
pub fn difference_inverse(
    frame: &LongFrame,
    anchors: &[DifferenceAnchor],
    mode: NormMode,
    apply_to: ApplyTo,
) -> Result<LongFrame> {
    if anchors.len() != frame.n_series() {
        return Err(Error::MissingAnchor(format!(
            "{} difference anchors for {} series",
            anchors.len(),
            frame.n_series()
        )));
    }
    let mut it = anchors.iter();
    frame.map_series(|s| {
        let a = it.next().unwrap();
        let mut timestamps = vec![a.first_timestamp];
        timestamps.extend_from_slice(&s.timestamps);
        let mut values = vec![a.first_target];
        if apply_to.target() {
            values.extend(integrate(a.first_target, &s.values, mode));
        } else {
            values.extend_from_slice(&s.values);
        }
        let exog = s
            .exog
            .iter()
            .zip(&a.first_exog)
            .map(|(col, first)| match first {
                Some(f) => {
                    let mut v = vec![*f];
                    v.extend(integrate(*f, col, mode));
                    v
                }
                // untouched columns lost their first value; repeat the next one
                None => {
                    let mut v = vec![col.first().copied().unwrap_or(f64::NAN)];
                    v.extend_from_slice(col);
                    v
                }
            })
            .collect();
        Ok(Series {
            id: s.id.clone(),
            timestamps,
            values,
            exog,
        })
    })
}
