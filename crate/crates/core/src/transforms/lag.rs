//! Long-to-wide conversion.
//!
//! A row is anchored at a timestamp `t` (the last point of its history
//! window). Lag `k` of a column means its value at `t - k*step`; target
//! column `j` of a row with offset `o` refers to `t + (o + j + 1)*step`.
//! Rows never reference anything after `t` on the feature side.
//!
//! Column layout for a row with `C` channels and `E` exogenous columns:
//!
//! ```text
//! [ch0: y lags (oldest..lag0) | ch0: exog0 lags | .. | ch1: y lags | ..]
//! [datetime part0 lags | part1 lags | ..] [id] [horizon index]
//! ```

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::calendar::DatePart;
use super::ids::{IdEncoding, IdVocabulary};
use crate::data::{ExogColumn, ExogKind, Frequency, LongFrame, Series};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How the flat-wide horizon index is fed to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonEncoding {
    /// One integer column holding `1..=H`.
    #[default]
    Raw,
    /// `H` indicator columns.
    Onehot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum ColumnRole {
    TargetLag,
    ExogLag { column: usize, categorical: bool },
    Datetime { part: DatePart },
    Id,
    HorizonIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    #[serde(flatten)]
    pub role: ColumnRole,
    pub channel: Option<usize>,
    pub lag: Option<usize>,
}

/// Target column `j`: channel and absolute horizon step (0-based, i.e. the
/// value at `t + (step + 1) * freq`). `step` is `None` for flat-wide rows,
/// where the step is the row's horizon index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetMeta {
    pub channel: usize,
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowAnchor {
    /// `None` for multivariate rows spanning every series.
    pub series_id: Option<String>,
    /// Timestamp of the last history point.
    pub timestamp: i64,
    /// Lag-0 target value per channel, before any row normalization.
    pub last_known: Vec<f64>,
    /// Lag-0 exogenous values (channel-major), recorded only when the
    /// row normalization touched exogenous columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exog_last_known: Vec<f64>,
    /// 1-based horizon index of flat-wide rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

/// Wide sample matrix with column metadata and per-row anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub columns: Vec<ColumnMeta>,
    pub targets: Vec<TargetMeta>,
    pub x: Matrix,
    pub y: Matrix,
    pub anchors: Vec<RowAnchor>,
    /// Frequency step, for timestamp arithmetic on lags.
    pub step: i64,
    /// Row normalization applied so far, if any.
    pub normalized: Option<(super::NormMode, super::ApplyTo)>,
}

impl FeatureMatrix {
    pub fn empty(columns: Vec<ColumnMeta>, targets: Vec<TargetMeta>, step: i64) -> Self {
        FeatureMatrix {
            x: Matrix::with_cols(columns.len()),
            y: Matrix::with_cols(targets.len()),
            columns,
            targets,
            anchors: Vec::new(),
            step,
            normalized: None,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn push(&mut self, features: &[f64], targets: &[f64], anchor: RowAnchor) {
        self.x.push_row(features);
        self.y.push_row(targets);
        self.anchors.push(anchor);
    }

    pub fn append(&mut self, other: &FeatureMatrix) {
        self.x.vstack(&other.x);
        self.y.vstack(&other.y);
        self.anchors.extend(other.anchors.iter().cloned());
    }

    /// Rows whose index satisfies `keep`, in order.
    pub fn filter_rows(&self, keep: impl Fn(usize, &RowAnchor) -> bool) -> FeatureMatrix {
        let idx: Vec<usize> = self
            .anchors
            .iter()
            .enumerate()
            .filter(|(i, a)| keep(*i, a))
            .map(|(i, _)| i)
            .collect();
        FeatureMatrix {
            columns: self.columns.clone(),
            targets: self.targets.clone(),
            x: self.x.select_rows(&idx),
            y: self.y.select_rows(&idx),
            anchors: idx.iter().map(|&i| self.anchors[i].clone()).collect(),
            step: self.step,
            normalized: self.normalized,
        }
    }

    /// Latest timestamp any feature of row `r` references.
    pub fn max_feature_timestamp(&self, r: usize) -> i64 {
        let t = self.anchors[r].timestamp;
        self.columns
            .iter()
            .filter_map(|c| c.lag)
            .map(|lag| t - lag as i64 * self.step)
            .max()
            .unwrap_or(t)
    }

    /// Earliest timestamp any target of row `r` references.
    pub fn min_target_timestamp(&self, r: usize) -> i64 {
        let a = &self.anchors[r];
        self.targets
            .iter()
            .map(|m| {
                let step = m.step.or(a.horizon.map(|h| h - 1)).unwrap_or(0);
                a.timestamp + (step as i64 + 1) * self.step
            })
            .min()
            .unwrap_or(i64::MAX)
    }

    /// `max feature ts <= anchor < min target ts` for every row.
    pub fn is_leakage_free(&self) -> bool {
        (0..self.n_rows()).all(|r| {
            let t = self.anchors[r].timestamp;
            self.max_feature_timestamp(r) <= t && t < self.min_target_timestamp(r)
        })
    }

    /// Index of the lag-0 target column of `channel`.
    pub fn lag0_column(&self, channel: usize) -> Option<usize> {
        self.columns.iter().position(|c| {
            c.role == ColumnRole::TargetLag && c.channel == Some(channel) && c.lag == Some(0)
        })
    }
}

/// Borrowed data for one row: the `history` most recent values of every
/// channel, ending at `anchor`.
#[derive(Debug, Clone)]
pub struct GroupWindow<'a> {
    pub anchor: i64,
    pub id_index: Option<usize>,
    pub channels: Vec<ChannelWindow<'a>>,
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ChannelWindow<'a> {
    pub target: &'a [f64],
    pub exog: Vec<&'a [f64]>,
}

/// Frozen column layout shared by fitting and inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    /// Channel labels; a single generic channel in global mode.
    pub channels: Vec<String>,
    pub history: usize,
    pub frequency: Frequency,
    pub exogenous: Vec<ExogColumn>,
    pub datetime: Option<(Vec<DatePart>, usize)>,
    pub id: Option<(IdEncoding, IdVocabulary)>,
    pub horizon: Option<(HorizonEncoding, usize)>,
}

impl FeatureSchema {
    /// Target lags only, one channel.
    pub fn target_only(history: usize, frequency: Frequency) -> Self {
        FeatureSchema {
            channels: vec!["y".into()],
            history,
            frequency,
            exogenous: Vec::new(),
            datetime: None,
            id: None,
            horizon: None,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    fn channel_block(&self) -> usize {
        self.history * (1 + self.exogenous.len())
    }

    pub fn target_lags(&self, channel: usize) -> Range<usize> {
        let start = channel * self.channel_block();
        start..start + self.history
    }

    pub fn exog_lags(&self, channel: usize, column: usize) -> Range<usize> {
        let start = channel * self.channel_block() + self.history * (1 + column);
        start..start + self.history
    }

    pub fn lag0(&self, channel: usize) -> usize {
        self.target_lags(channel).end - 1
    }

    fn datetime_width(&self) -> usize {
        self.datetime.as_ref().map_or(0, |(p, l)| p.len() * l)
    }

    fn id_width(&self) -> usize {
        self.id.as_ref().map_or(0, |(e, v)| v.width(*e))
    }

    pub fn horizon_columns(&self) -> Option<Range<usize>> {
        let (enc, h) = self.horizon?;
        let start = self.channels.len() * self.channel_block() + self.datetime_width() + self.id_width();
        let w = match enc {
            HorizonEncoding::Raw => 1,
            HorizonEncoding::Onehot => h,
        };
        Some(start..start + w)
    }

    pub fn width(&self) -> usize {
        self.channels.len() * self.channel_block()
            + self.datetime_width()
            + self.id_width()
            + self.horizon_columns().map_or(0, |r| r.len())
    }

    pub fn with_horizon(&self, encoding: HorizonEncoding, horizon: usize) -> Self {
        FeatureSchema {
            horizon: Some((encoding, horizon)),
            ..self.clone()
        }
    }

    pub fn columns(&self) -> Vec<ColumnMeta> {
        let mut cols = Vec::with_capacity(self.width());
        let multi = self.channels.len() > 1;
        let tag = |c: usize| {
            if multi {
                format!("[{}]", self.channels[c])
            } else {
                String::new()
            }
        };
        for c in 0..self.channels.len() {
            for lag in (0..self.history).rev() {
                cols.push(ColumnMeta {
                    name: format!("y{}_lag{lag}", tag(c)),
                    role: ColumnRole::TargetLag,
                    channel: Some(c),
                    lag: Some(lag),
                });
            }
            for (e, ex) in self.exogenous.iter().enumerate() {
                for lag in (0..self.history).rev() {
                    cols.push(ColumnMeta {
                        name: format!("{}{}_lag{lag}", ex.name, tag(c)),
                        role: ColumnRole::ExogLag {
                            column: e,
                            categorical: ex.kind == ExogKind::Categorical,
                        },
                        channel: Some(c),
                        lag: Some(lag),
                    });
                }
            }
        }
        if let Some((parts, lags)) = &self.datetime {
            for p in parts {
                for lag in (0..*lags).rev() {
                    cols.push(ColumnMeta {
                        name: format!("{}_lag{lag}", p.name()),
                        role: ColumnRole::Datetime { part: *p },
                        channel: None,
                        lag: Some(lag),
                    });
                }
            }
        }
        if let Some((enc, vocab)) = &self.id {
            match enc {
                IdEncoding::Label => cols.push(ColumnMeta {
                    name: "id".into(),
                    role: ColumnRole::Id,
                    channel: None,
                    lag: None,
                }),
                IdEncoding::Onehot => {
                    for id in vocab.ids() {
                        cols.push(ColumnMeta {
                            name: format!("id={id}"),
                            role: ColumnRole::Id,
                            channel: None,
                            lag: None,
                        });
                    }
                }
            }
        }
        if let Some((enc, h)) = self.horizon {
            match enc {
                HorizonEncoding::Raw => cols.push(ColumnMeta {
                    name: "horizon".into(),
                    role: ColumnRole::HorizonIndex,
                    channel: None,
                    lag: None,
                }),
                HorizonEncoding::Onehot => {
                    for k in 1..=h {
                        cols.push(ColumnMeta {
                            name: format!("horizon={k}"),
                            role: ColumnRole::HorizonIndex,
                            channel: None,
                            lag: None,
                        });
                    }
                }
            }
        }
        cols
    }

    /// Target layout for `width` outputs per channel starting at `offset`.
    pub fn target_meta(&self, offset: usize, width: usize) -> Vec<TargetMeta> {
        (0..self.channels.len())
            .flat_map(|c| {
                (0..width).map(move |j| TargetMeta {
                    channel: c,
                    step: Some(offset + j),
                })
            })
            .collect()
    }

    /// Appends one feature row for `w` to `out`.
    pub fn write_row(&self, w: &GroupWindow<'_>, out: &mut Vec<f64>) -> Result<()> {
        debug_assert_eq!(w.channels.len(), self.channels.len());
        for ch in &w.channels {
            if ch.target.len() != self.history {
                return Err(Error::DimensionMismatch {
                    expected: self.history,
                    actual: ch.target.len(),
                });
            }
            out.extend_from_slice(ch.target);
            for col in &ch.exog {
                out.extend_from_slice(col);
            }
        }
        if let Some((parts, lags)) = &self.datetime {
            for p in parts {
                for lag in (0..*lags).rev() {
                    let tick = w.anchor - lag as i64 * self.frequency.step;
                    out.push(p.at_tick(self.frequency, tick)?);
                }
            }
        }
        if let Some((enc, vocab)) = &self.id {
            let idx = w.id_index.ok_or_else(|| Error::UnknownSeries("<multivariate row>".into()))?;
            vocab.encode_into(idx, *enc, out);
        }
        if let Some((enc, h)) = self.horizon {
            let k = w.horizon.unwrap_or(1);
            match enc {
                HorizonEncoding::Raw => out.push(k as f64),
                HorizonEncoding::Onehot => out.extend((1..=h).map(|j| (j == k) as u8 as f64)),
            }
        }
        Ok(())
    }

    /// Rows for every anchor of a channel group whose history window and
    /// target block (`offset + width` steps ahead) both fit inside the data.
    /// All series in `group` must share timestamps.
    pub(crate) fn build_rows(
        &self,
        group: &[&Series],
        id_index: Option<usize>,
        series_id: Option<&str>,
        offset: usize,
        width: usize,
        out: &mut FeatureMatrix,
    ) -> Result<()> {
        let len = group[0].len();
        let ahead = offset + width;
        if len < self.history + ahead {
            return Ok(());
        }
        let exog_idx: Vec<usize> = self.exogenous_positions(group[0]);
        let mut features = Vec::with_capacity(self.width());
        let mut targets = Vec::with_capacity(group.len() * width);
        for i in (self.history - 1)..(len - ahead) {
            let lo = i + 1 - self.history;
            let window = GroupWindow {
                anchor: group[0].timestamps[i],
                id_index,
                channels: group
                    .iter()
                    .map(|s| ChannelWindow {
                        target: &s.values[lo..=i],
                        exog: exog_idx.iter().map(|&c| &s.exog[c][lo..=i]).collect(),
                    })
                    .collect(),
                horizon: None,
            };
            features.clear();
            self.write_row(&window, &mut features)?;
            targets.clear();
            for s in group {
                targets.extend_from_slice(&s.values[i + 1 + offset..i + 1 + ahead]);
            }
            out.push(
                &features,
                &targets,
                RowAnchor {
                    series_id: series_id.map(str::to_string),
                    timestamp: window.anchor,
                    last_known: group.iter().map(|s| s.values[i]).collect(),
                    exog_last_known: Vec::new(),
                    horizon: None,
                },
            );
        }
        Ok(())
    }

    /// Positions of the schema's exogenous columns inside series data. The
    /// schema keeps a frame's columns in order, so this is `0..E`.
    fn exogenous_positions(&self, _s: &Series) -> Vec<usize> {
        (0..self.exogenous.len()).collect()
    }
}

/// Global-mode lag matrix: every series contributes
/// `T - history - mh + 1` rows of `history` target lags (plus exogenous
/// lags when the frame carries exogenous columns) and `mh` targets.
/// Series that are too short are skipped with a warning.
pub fn make_lag_matrix(frame: &LongFrame, history: usize, mh: usize) -> Result<FeatureMatrix> {
    if history == 0 || mh == 0 {
        return Err(Error::Constraint("history and mh must be positive".into()));
    }
    let schema = FeatureSchema {
        exogenous: frame.exogenous().to_vec(),
        ..FeatureSchema::target_only(history, frame.frequency())
    };
    let mut m = FeatureMatrix::empty(schema.columns(), schema.target_meta(0, mh), frame.frequency().step);
    let mut used = 0;
    for s in frame.series() {
        if s.len() < history + mh {
            log::warn!(
                "series `{}` has {} points, fewer than history + mh = {}; skipped",
                s.id,
                s.len(),
                history + mh
            );
            continue;
        }
        schema.build_rows(&[s], None, Some(&s.id), 0, mh, &mut m)?;
        used += 1;
    }
    if used == 0 {
        let s = &frame.series()[0];
        return Err(Error::SeriesTooShort {
            series: s.id.clone(),
            length: s.len(),
            required: history + mh,
        });
    }
    Ok(m)
}
