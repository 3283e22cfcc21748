//! Row-wise normalization of wide samples by their most recent observation.

use super::lag::{ColumnMeta, ColumnRole, FeatureMatrix, TargetMeta};
use super::{ApplyTo, NormMode};
use crate::error::{Error, Result};

/// For each column, the column whose value acts as its reference.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LknPlan {
    mode: NormMode,
    feature_ref: Vec<Option<usize>>,
    target_ref: Vec<Option<usize>>,
    /// Lag-0 target column per channel.
    channel_lag0: Vec<usize>,
    /// Lag-0 columns of normalized exogenous lags, channel-major.
    exog_lag0: Vec<usize>,
}

fn lag0_of(columns: &[ColumnMeta], role: &ColumnRole, channel: Option<usize>) -> Option<usize> {
    columns
        .iter()
        .position(|c| &c.role == role && c.channel == channel && c.lag == Some(0))
}

impl LknPlan {
    pub(crate) fn new(
        columns: &[ColumnMeta],
        targets: &[TargetMeta],
        mode: NormMode,
        apply_to: ApplyTo,
    ) -> Result<Self> {
        let n_channels = targets.iter().map(|t| t.channel + 1).max().unwrap_or(0);
        let channel_lag0 = (0..n_channels)
            .map(|c| {
                lag0_of(columns, &ColumnRole::TargetLag, Some(c)).ok_or_else(|| {
                    Error::InvalidPipeline(format!("no lag-0 target column for channel {c}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut exog_lag0 = Vec::new();
        let feature_ref = columns
            .iter()
            .map(|c| match &c.role {
                ColumnRole::TargetLag if apply_to.target() => c.channel.map(|ch| channel_lag0[ch]),
                role @ ColumnRole::ExogLag {
                    categorical: false, ..
                } if apply_to.features() => {
                    let r = lag0_of(columns, role, c.channel);
                    if c.lag == Some(0) {
                        exog_lag0.extend(r);
                    }
                    r
                }
                _ => None,
            })
            .collect();
        let target_ref = targets
            .iter()
            .map(|t| apply_to.target().then(|| channel_lag0[t.channel]))
            .collect();
        Ok(LknPlan {
            mode,
            feature_ref,
            target_ref,
            channel_lag0,
            exog_lag0,
        })
    }

    pub(crate) fn touches_exog(&self) -> bool {
        !self.exog_lag0.is_empty()
    }

    /// Normalizes a feature row (and optionally its targets) in place.
    /// Fails with the offending reference value's column if a ratio
    /// reference is zero.
    pub(crate) fn forward_row(&self, x: &mut [f64], y: Option<&mut [f64]>) -> std::result::Result<(), usize> {
        let reference: Vec<f64> = x.to_vec();
        if self.mode == NormMode::Ratio {
            let zero = self
                .feature_ref
                .iter()
                .chain(&self.target_ref)
                .flatten()
                .find(|&&r| reference[r] == 0.0);
            if let Some(&r) = zero {
                return Err(r);
            }
        }
        for (v, r) in x.iter_mut().zip(&self.feature_ref) {
            if let Some(r) = r {
                *v = self.mode.forward(*v, reference[*r]);
            }
        }
        if let Some(y) = y {
            for (v, r) in y.iter_mut().zip(&self.target_ref) {
                if let Some(r) = r {
                    *v = self.mode.forward(*v, reference[*r]);
                }
            }
        }
        Ok(())
    }

    /// Maps normalized targets back using the row's pre-normalization
    /// lag-0 values.
    pub(crate) fn inverse_targets(&self, y: &mut [f64], targets: &[TargetMeta], last_known: &[f64]) {
        for ((v, r), t) in y.iter_mut().zip(&self.target_ref).zip(targets) {
            if r.is_some() {
                *v = self.mode.inverse(*v, last_known[t.channel]);
            }
        }
    }

    fn inverse_features(&self, x: &mut [f64], last_known: &[f64], exog_last_known: &[f64]) {
        let mut refs = vec![f64::NAN; x.len()];
        for (c, &col) in self.channel_lag0.iter().enumerate() {
            refs[col] = last_known[c];
        }
        for (k, &col) in self.exog_lag0.iter().enumerate() {
            refs[col] = exog_last_known[k];
        }
        for (v, r) in x.iter_mut().zip(&self.feature_ref) {
            if let Some(r) = r {
                *v = self.mode.inverse(*v, refs[*r]);
            }
        }
    }
}

/// Normalizes target-lag columns and targets of every row by the row's
/// lag-0 target value. Other columns are left untouched.
pub fn last_known_normalize(matrix: &FeatureMatrix, mode: NormMode) -> Result<FeatureMatrix> {
    last_known_normalize_with(matrix, mode, ApplyTo::Target)
}

pub fn last_known_normalize_with(
    matrix: &FeatureMatrix,
    mode: NormMode,
    apply_to: ApplyTo,
) -> Result<FeatureMatrix> {
    if matrix.normalized.is_some() {
        return Err(Error::InvalidPipeline("matrix is already last-known normalized".into()));
    }
    let plan = LknPlan::new(&matrix.columns, &matrix.targets, mode, apply_to)?;
    let mut out = matrix.clone();
    out.normalized = Some((mode, apply_to));
    for r in 0..out.n_rows() {
        if plan.touches_exog() {
            out.anchors[r].exog_last_known = plan.exog_lag0.iter().map(|&c| out.x.get(r, c)).collect();
        }
        let (x, y) = (out.x.row_mut(r), out.y.row_mut(r));
        if plan.forward_row(x, Some(y)).is_err() {
            let a = &out.anchors[r];
            return Err(Error::ZeroAnchor {
                series: a.series_id.clone().unwrap_or_else(|| "<multivariate>".into()),
                timestamp: a.timestamp,
            });
        }
    }
    Ok(out)
}

/// Undoes [`last_known_normalize`] using the values stored in the row
/// anchors.
pub fn last_known_denormalize(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    let (mode, apply_to) = matrix
        .normalized
        .ok_or_else(|| Error::InvalidPipeline("matrix is not last-known normalized".into()))?;
    let plan = LknPlan::new(&matrix.columns, &matrix.targets, mode, apply_to)?;
    let mut out = matrix.clone();
    out.normalized = None;
    for r in 0..out.n_rows() {
        let a = out.anchors[r].clone();
        plan.inverse_features(out.x.row_mut(r), &a.last_known, &a.exog_last_known);
        plan.inverse_targets(out.y.row_mut(r), &matrix.targets, &a.last_known);
        out.anchors[r].exog_last_known.clear();
    }
    Ok(out)
}

/// Inverse of one normalized value given its reference.
pub fn lkn_inverse_value(v: f64, last_known: f64, mode: NormMode) -> f64 {
    mode.inverse(v, last_known)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Frequency, LongFrame};
    use crate::transforms::make_lag_matrix;

    fn matrix(values: Vec<f64>, history: usize, mh: usize) -> FeatureMatrix {
        let f = LongFrame::from_values(Frequency::ordinal(1), [("a", values)]).unwrap();
        make_lag_matrix(&f, history, mh).unwrap()
    }

    #[test]
    fn delta_subtracts_lag0() {
        let m = matrix(vec![1.0, 2.0, 3.0, 4.0, 5.0], 3, 2);
        let n = last_known_normalize(&m, NormMode::Delta).unwrap();
        assert_eq!(n.x.row(0), &[-2.0, -1.0, 0.0]);
        assert_eq!(n.y.row(0), &[1.0, 2.0]);
        assert_eq!(n.anchors[0].last_known, vec![3.0]);
    }

    #[test]
    fn ratio_divides_by_lag0() {
        let m = matrix(vec![2.0, 4.0, 8.0], 2, 1);
        let n = last_known_normalize(&m, NormMode::Ratio).unwrap();
        assert_eq!(n.x.row(0), &[0.5, 1.0]);
        assert_eq!(n.y.row(0), &[2.0]);
    }

    #[test]
    fn ratio_rejects_zero_anchor() {
        let m = matrix(vec![2.0, 0.0, 8.0], 2, 1);
        let err = last_known_normalize(&m, NormMode::Ratio).unwrap_err();
        assert!(matches!(err, Error::ZeroAnchor { timestamp: 1, .. }));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = matrix(vec![1.5, -2.0, 3.25, 4.0, 5.5, 6.0], 3, 2);
        for mode in [NormMode::Delta, NormMode::Ratio] {
            let back = last_known_denormalize(&last_known_normalize(&m, mode).unwrap()).unwrap();
            for (a, b) in back.x.as_slice().iter().zip(m.x.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in back.y.as_slice().iter().zip(m.y.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
