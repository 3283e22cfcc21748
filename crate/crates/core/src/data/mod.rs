//! Long-format multi-series datasets: ingestion, validation and slicing.
//!
//! Timestamps are normalized to integer ticks at load time (see
//! [`Frequency`]); everything downstream works with integers and the
//! declared step.

mod csv;
mod frequency;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

pub use self::csv::{load_long_csv, write_long_csv, CsvOptions};
pub use self::frequency::{Frequency, TimeUnit};
use crate::error::{Error, Result};

/// Declared type of an exogenous column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExogKind {
    Real,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogRole {
    pub name: String,
    #[serde(default = "default_exog_kind")]
    pub kind: ExogKind,
}

fn default_exog_kind() -> ExogKind {
    ExogKind::Real
}

/// Which source columns play which role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleMap {
    pub id: String,
    pub datetime: String,
    pub target: String,
    #[serde(default)]
    pub exogenous: Vec<ExogRole>,
}

/// Schema of an exogenous column carried by a frame. Categorical values are
/// stored as their index into `vocabulary`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExogColumn {
    pub name: String,
    pub kind: ExogKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocabulary: Vec<String>,
}

impl ExogColumn {
    pub fn real(name: impl Into<String>) -> Self {
        ExogColumn {
            name: name.into(),
            kind: ExogKind::Real,
            vocabulary: Vec::new(),
        }
    }
}

/// One series in long format. `exog[c][i]` is exogenous column `c` at
/// position `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: String,
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
    pub exog: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(id: impl Into<String>, timestamps: Vec<i64>, values: Vec<f64>) -> Self {
        Series {
            id: id.into(),
            timestamps,
            values,
            exog: Vec::new(),
        }
    }

    /// Regular series starting at `start` with the given step.
    pub fn regular(id: impl Into<String>, start: i64, step: i64, values: Vec<f64>) -> Self {
        let timestamps = (0..values.len() as i64).map(|i| start + i * step).collect();
        Series::new(id, timestamps, values)
    }

    pub fn with_exog(mut self, exog: Vec<Vec<f64>>) -> Self {
        self.exog = exog;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Positions `range` of every column.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Series {
        Series {
            id: self.id.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            values: self.values[range.clone()].to_vec(),
            exog: self.exog.iter().map(|c| c[range.clone()].to_vec()).collect(),
        }
    }
}

/// A single observation, as read from a long-format file.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub series_id: String,
    pub timestamp: i64,
    pub target: f64,
    pub exog: Vec<f64>,
}

/// Tidy multi-series dataset: `(series id, timestamp, target, exogenous...)`.
///
/// Series are kept sorted by id. A frame is immutable once built; the
/// slicing helpers return new frames.
#[derive(Debug, Clone, PartialEq)]
pub struct LongFrame {
    frequency: Frequency,
    exogenous: Vec<ExogColumn>,
    series: Vec<Series>,
}

impl LongFrame {
    /// Builds a frame from whole series. Per-series ordering is taken as
    /// given; [`validate_frame`] reports ordering problems.
    pub fn from_series(
        frequency: Frequency,
        exogenous: Vec<ExogColumn>,
        mut series: Vec<Series>,
    ) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::EmptyDataset);
        }
        series.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in series.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidData(format!(
                    "series id `{}` appears twice",
                    pair[0].id
                )));
            }
        }
        for s in &series {
            if s.timestamps.len() != s.values.len() {
                return Err(Error::InvalidData(format!(
                    "series `{}` has {} timestamps but {} values",
                    s.id,
                    s.timestamps.len(),
                    s.values.len()
                )));
            }
            if s.exog.len() != exogenous.len() || s.exog.iter().any(|c| c.len() != s.len()) {
                return Err(Error::InvalidData(format!(
                    "series `{}` exogenous columns do not match the frame schema",
                    s.id
                )));
            }
        }
        Ok(LongFrame {
            frequency,
            exogenous,
            series,
        })
    }

    /// Target-only frame from `(id, values)` pairs on a regular ordinal grid
    /// starting at 0.
    pub fn from_values<S: Into<String>>(
        frequency: Frequency,
        series: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self> {
        let series = series
            .into_iter()
            .map(|(id, v)| Series::regular(id, 0, frequency.step, v))
            .collect();
        Self::from_series(frequency, Vec::new(), series)
    }

    /// Groups records by series, sorting each series by timestamp.
    pub fn from_records(
        frequency: Frequency,
        exogenous: Vec<ExogColumn>,
        records: Vec<Record>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut groups: BTreeMap<String, Vec<Record>> = BTreeMap::new();
        for r in records {
            groups.entry(r.series_id.clone()).or_default().push(r);
        }
        let mut series = Vec::with_capacity(groups.len());
        for (id, mut recs) in groups {
            recs.sort_by_key(|r| r.timestamp);
            if let Some(w) = recs.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
                return Err(Error::DuplicateKey {
                    series: id,
                    timestamp: w[0].timestamp,
                });
            }
            let mut exog = vec![Vec::with_capacity(recs.len()); exogenous.len()];
            for r in &recs {
                for (c, v) in r.exog.iter().enumerate() {
                    exog[c].push(*v);
                }
            }
            series.push(Series {
                id,
                timestamps: recs.iter().map(|r| r.timestamp).collect(),
                values: recs.iter().map(|r| r.target).collect(),
                exog,
            });
        }
        Self::from_series(frequency, exogenous, series)
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn exogenous(&self) -> &[ExogColumn] {
        &self.exogenous
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn n_series(&self) -> usize {
        self.series.len()
    }

    pub fn series_ids(&self) -> Vec<&str> {
        self.series.iter().map(|s| s.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Series> {
        self.series
            .binary_search_by(|s| s.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.series[i])
    }

    pub fn n_records(&self) -> usize {
        self.series.iter().map(Series::len).sum()
    }

    pub fn min_len(&self) -> usize {
        self.series.iter().map(Series::len).min().unwrap_or(0)
    }

    /// All records, sorted by `(series_id, timestamp)`.
    pub fn records(&self) -> Vec<Record> {
        let mut out = Vec::with_capacity(self.n_records());
        for s in &self.series {
            for i in 0..s.len() {
                out.push(Record {
                    series_id: s.id.clone(),
                    timestamp: s.timestamps[i],
                    target: s.values[i],
                    exog: s.exog.iter().map(|c| c[i]).collect(),
                });
            }
        }
        out
    }

    /// Same frame with each series replaced by `f(series)`; the schema is kept.
    pub fn map_series(&self, mut f: impl FnMut(&Series) -> Result<Series>) -> Result<LongFrame> {
        let series = self.series.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(LongFrame {
            frequency: self.frequency,
            exogenous: self.exogenous.clone(),
            series,
        })
    }

    /// Keeps the first `keep(len)` points of every series.
    pub fn truncate_each(&self, keep: impl Fn(usize) -> usize) -> LongFrame {
        LongFrame {
            frequency: self.frequency,
            exogenous: self.exogenous.clone(),
            series: self
                .series
                .iter()
                .map(|s| s.slice(0..keep(s.len()).min(s.len())))
                .collect(),
        }
    }

    /// Frame restricted to the given series ids (missing ids are ignored).
    pub fn select(&self, ids: &[&str]) -> Option<LongFrame> {
        let series: Vec<Series> = self
            .series
            .iter()
            .filter(|s| ids.contains(&s.id.as_str()))
            .cloned()
            .collect();
        if series.is_empty() {
            return None;
        }
        Some(LongFrame {
            frequency: self.frequency,
            exogenous: self.exogenous.clone(),
            series,
        })
    }
}

/// Per-series validation findings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub series_id: String,
    pub length: usize,
    pub first_timestamp: Option<i64>,
    pub last_timestamp: Option<i64>,
    /// Consecutive pairs whose delta differs from the declared step.
    pub irregular: usize,
    /// Missing or non-finite target / real exogenous values.
    pub missing: usize,
    /// Pairs that are not strictly increasing (duplicates included).
    pub unordered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub series: Vec<SeriesReport>,
    pub aligned: bool,
}

impl ValidationReport {
    /// Human-readable list of every invariant violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.series {
            if s.length == 0 {
                out.push(format!("series `{}` is empty", s.series_id));
            }
            if s.unordered > 0 {
                out.push(format!(
                    "series `{}`: {} non-increasing timestamp pair(s)",
                    s.series_id, s.unordered
                ));
            }
            if s.irregular > 0 {
                out.push(format!(
                    "series `{}`: {} irregular step(s)",
                    s.series_id, s.irregular
                ));
            }
            if s.missing > 0 {
                out.push(format!(
                    "series `{}`: {} missing value(s)",
                    s.series_id, s.missing
                ));
            }
        }
        out
    }

    pub fn is_clean(&self) -> bool {
        self.violations().is_empty()
    }

    /// `Ok` when there are no violations, `InvalidData` otherwise.
    pub fn ensure_clean(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidData(v.join("; ")))
        }
    }
}

/// Enumerates invariant violations without modifying the frame.
pub fn validate_frame(frame: &LongFrame) -> ValidationReport {
    let step = frame.frequency.step;
    let real_cols: Vec<usize> = frame
        .exogenous
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ExogKind::Real)
        .map(|(i, _)| i)
        .collect();
    let series = frame
        .series
        .iter()
        .map(|s| {
            let mut irregular = 0;
            let mut unordered = 0;
            for w in s.timestamps.windows(2) {
                let d = w[1] - w[0];
                if d <= 0 {
                    unordered += 1;
                } else if d != step {
                    irregular += 1;
                }
            }
            let mut missing = s.values.iter().filter(|v| !v.is_finite()).count();
            for &c in &real_cols {
                missing += s.exog[c].iter().filter(|v| !v.is_finite()).count();
            }
            for (c, col) in frame.exogenous.iter().enumerate() {
                if col.kind == ExogKind::Categorical {
                    missing += s.exog[c].iter().filter(|v| v.is_nan()).count();
                }
            }
            SeriesReport {
                series_id: s.id.clone(),
                length: s.len(),
                first_timestamp: s.timestamps.first().copied(),
                last_timestamp: s.timestamps.last().copied(),
                irregular,
                missing,
                unordered,
            }
        })
        .collect();
    ValidationReport {
        series,
        aligned: check_alignment(frame),
    }
}

/// True iff all series share an identical timestamp vector.
pub fn check_alignment(frame: &LongFrame) -> bool {
    let first = &frame.series[0].timestamps;
    frame.series.iter().all(|s| &s.timestamps == first)
}

/// Splits off the last `test_horizon` points of every series.
pub fn temporal_split(frame: &LongFrame, test_horizon: usize) -> Result<(LongFrame, LongFrame)> {
    if test_horizon == 0 {
        return Err(Error::Constraint("test horizon must be positive".into()));
    }
    if let Some(s) = frame.series.iter().find(|s| s.len() <= test_horizon) {
        return Err(Error::SeriesTooShort {
            series: s.id.clone(),
            length: s.len(),
            required: test_horizon + 1,
        });
    }
    let mut train = Vec::with_capacity(frame.n_series());
    let mut test = Vec::with_capacity(frame.n_series());
    for s in &frame.series {
        let cut = s.len() - test_horizon;
        train.push(s.slice(0..cut));
        test.push(s.slice(cut..s.len()));
    }
    let mk = |series| LongFrame {
        frequency: frame.frequency,
        exogenous: frame.exogenous.clone(),
        series,
    };
    Ok((mk(train), mk(test)))
}

/// Distinct timestamps across all series, for diagnostics.
pub fn timestamp_union(frame: &LongFrame) -> BTreeSet<i64> {
    frame
        .series
        .iter()
        .flat_map(|s| s.timestamps.iter().copied())
        .collect()
}

/// Series ids that occur in `a` but not in `b`.
pub fn missing_ids<'a>(a: &'a LongFrame, b: &LongFrame) -> Vec<&'a str> {
    let known: HashSet<&str> = b.series.iter().map(|s| s.id.as_str()).collect();
    a.series
        .iter()
        .map(|s| s.id.as_str())
        .filter(|id| !known.contains(id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_series(len_a: usize, len_b: usize) -> LongFrame {
        LongFrame::from_values(
            Frequency::ordinal(1),
            [
                ("a", (0..len_a).map(|i| i as f64).collect::<Vec<_>>()),
                ("b", (0..len_b).map(|i| 10.0 + i as f64).collect()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn regular_frame_is_clean_and_aligned() {
        let r = validate_frame(&two_series(5, 5));
        assert!(r.violations().is_empty());
        assert!(r.aligned);
    }

    #[test]
    fn missing_timestamp_counts_one_irregularity() {
        let f = LongFrame::from_series(
            Frequency::ordinal(1),
            vec![],
            vec![
                Series::new("a", vec![0, 1, 2, 3], vec![1.0; 4]),
                Series::new("b", vec![0, 1, 3], vec![1.0; 3]),
            ],
        )
        .unwrap();
        let r = validate_frame(&f);
        assert_eq!(r.series[1].irregular, 1);
        assert!(!r.aligned);
    }

    #[test]
    fn unequal_lengths_are_not_aligned() {
        assert!(!validate_frame(&two_series(5, 6)).aligned);
    }

    #[test]
    fn nan_target_counts_as_missing() {
        let f = LongFrame::from_values(Frequency::ordinal(1), [("a", vec![1.0, f64::NAN, 2.0])])
            .unwrap();
        let r = validate_frame(&f);
        assert_eq!(r.series[0].missing, 1);
        assert!(r.ensure_clean().is_err());
    }

    #[test]
    fn alignment_cases() {
        assert!(check_alignment(&two_series(4, 4)));
        let shifted = LongFrame::from_series(
            Frequency::ordinal(1),
            vec![],
            vec![
                Series::regular("a", 0, 1, vec![1.0; 4]),
                Series::regular("b", 1, 1, vec![1.0; 4]),
            ],
        )
        .unwrap();
        assert!(!check_alignment(&shifted));
        let single = LongFrame::from_values(Frequency::ordinal(1), [("x", vec![1.0])]).unwrap();
        assert!(check_alignment(&single));
    }

    #[test]
    fn temporal_split_lengths() {
        let (train, test) = temporal_split(&two_series(10, 12), 3).unwrap();
        assert_eq!(train.series()[0].len(), 7);
        assert_eq!(train.series()[1].len(), 9);
        assert_eq!(test.series()[0].len(), 3);
        assert_eq!(test.series()[1].timestamps, vec![9, 10, 11]);
    }

    #[test]
    fn temporal_split_rejects_short_series() {
        let err = temporal_split(&two_series(10, 3), 3).unwrap_err();
        match err {
            Error::SeriesTooShort { series, .. } => assert_eq!(series, "b"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn duplicate_records_are_rejected() {
        let rec = |t| Record {
            series_id: "a".into(),
            timestamp: t,
            target: 1.0,
            exog: vec![],
        };
        let err = LongFrame::from_records(Frequency::ordinal(1), vec![], vec![rec(1), rec(1)]);
        assert!(matches!(err, Err(Error::DuplicateKey { timestamp: 1, .. })));
    }
}
