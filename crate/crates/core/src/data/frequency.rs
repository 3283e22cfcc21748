//! Sampling frequency and the timestamp <-> integer tick mapping.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Base unit of the integer tick a timestamp is normalized to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// Plain integers; no calendar meaning.
    Ordinal,
    /// Hours since 1970-01-01T00:00.
    Hour,
    /// Days since 1970-01-01.
    Day,
    /// Months since year 0 (`year * 12 + month0`).
    Month,
}

/// Declared step between consecutive observations of a series, e.g. `1w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frequency {
    pub unit: TimeUnit,
    pub step: i64,
}

impl Frequency {
    pub const fn ordinal(step: i64) -> Self {
        Frequency {
            unit: TimeUnit::Ordinal,
            step,
        }
    }

    pub const fn days(n: i64) -> Self {
        Frequency {
            unit: TimeUnit::Day,
            step: n,
        }
    }

    pub const fn weeks(n: i64) -> Self {
        Frequency::days(7 * n)
    }

    pub fn is_calendar(&self) -> bool {
        self.unit != TimeUnit::Ordinal
    }

    /// Converts a raw datetime cell into a tick.
    pub fn parse_timestamp(&self, raw: &str) -> Result<i64, String> {
        let raw = raw.trim();
        match self.unit {
            TimeUnit::Ordinal => raw
                .parse::<i64>()
                .map_err(|_| format!("expected an integer timestamp, got `{raw}`")),
            unit => {
                let dt = parse_datetime(raw)?;
                Ok(match unit {
                    TimeUnit::Hour => dt.and_utc().timestamp().div_euclid(3600),
                    TimeUnit::Day => days_since_epoch(dt.date()),
                    TimeUnit::Month => dt.year() as i64 * 12 + dt.month0() as i64,
                    TimeUnit::Ordinal => unreachable!(),
                })
            }
        }
    }

    /// Calendar datetime of a tick, `None` for ordinal data.
    pub fn to_datetime(&self, tick: i64) -> Option<NaiveDateTime> {
        match self.unit {
            TimeUnit::Ordinal => None,
            TimeUnit::Hour => DateTime::from_timestamp(tick * 3600, 0).map(|d| d.naive_utc()),
            TimeUnit::Day => epoch()
                .checked_add_signed(chrono::Duration::days(tick))
                .map(|d| d.and_hms_opt(0, 0, 0).unwrap()),
            TimeUnit::Month => {
                let year = tick.div_euclid(12) as i32;
                let month = tick.rem_euclid(12) as u32 + 1;
                NaiveDate::from_ymd_opt(year, month, 1).map(|d| d.and_hms_opt(0, 0, 0).unwrap())
            }
        }
    }

    /// Renders a tick the way it would appear in an input file.
    pub fn format_tick(&self, tick: i64) -> String {
        match (self.unit, self.to_datetime(tick)) {
            (TimeUnit::Hour, Some(dt)) => dt.format("%Y-%m-%dT%H:%M:%S").to_string(),
            (TimeUnit::Day | TimeUnit::Month, Some(dt)) => dt.format("%Y-%m-%d").to_string(),
            _ => tick.to_string(),
        }
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

fn days_since_epoch(d: NaiveDate) -> i64 {
    (d - epoch()).num_days()
}

fn parse_datetime(raw: &str) -> Result<NaiveDateTime, String> {
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(dt);
        }
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Ok(dt.naive_utc());
    }
    Err(format!("unrecognized datetime `{raw}`"))
}

impl FromStr for Frequency {
    type Err = Error;

    /// Accepts `"1"` (ordinal), `"6h"`, `"1d"`, `"1w"`, `"1mo"`; a bare
    /// integer is an ordinal step.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        let (num, suffix) = s.split_at(split);
        let n: i64 = if num.is_empty() {
            1
        } else {
            num.parse().map_err(|_| bad_frequency(s))?
        };
        if n <= 0 {
            return Err(bad_frequency(s));
        }
        let freq = match suffix {
            "" => Frequency::ordinal(n),
            "h" => Frequency {
                unit: TimeUnit::Hour,
                step: n,
            },
            "d" => Frequency::days(n),
            "w" => Frequency::weeks(n),
            "mo" | "M" => Frequency {
                unit: TimeUnit::Month,
                step: n,
            },
            _ => return Err(bad_frequency(s)),
        };
        Ok(freq)
    }
}

fn bad_frequency(s: &str) -> Error {
    Error::Schema {
        path: "dataset.frequency".into(),
        message: format!("cannot parse frequency `{s}` (examples: 1, 1d, 1w, 6h, 1mo)"),
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            TimeUnit::Ordinal => write!(f, "{}", self.step),
            TimeUnit::Hour => write!(f, "{}h", self.step),
            TimeUnit::Day if self.step % 7 == 0 => write!(f, "{}w", self.step / 7),
            TimeUnit::Day => write!(f, "{}d", self.step),
            TimeUnit::Month => write!(f, "{}mo", self.step),
        }
    }
}

impl Serialize for Frequency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}
