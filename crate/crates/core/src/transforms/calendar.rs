use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::data::{Frequency, LongFrame};
use crate::error::{Error, Result};

/// Calendar component extracted from a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatePart {
    Year,
    Month,
    /// ISO-8601 week of year, 1..=53.
    Week,
    /// Day of month.
    Day,
    /// Monday = 0 .. Sunday = 6.
    Weekday,
}

impl DatePart {
    pub fn name(self) -> &'static str {
        match self {
            DatePart::Year => "year",
            DatePart::Month => "month",
            DatePart::Week => "week",
            DatePart::Day => "day",
            DatePart::Weekday => "weekday",
        }
    }

    pub fn extract(self, dt: &NaiveDateTime) -> f64 {
        match self {
            DatePart::Year => dt.year() as f64,
            DatePart::Month => dt.month() as f64,
            DatePart::Week => dt.iso_week().week() as f64,
            DatePart::Day => dt.day() as f64,
            DatePart::Weekday => dt.weekday().num_days_from_monday() as f64,
        }
    }

    /// Value of this part at an integer tick.
    pub fn at_tick(self, frequency: Frequency, tick: i64) -> Result<f64> {
        frequency
            .to_datetime(tick)
            .map(|dt| self.extract(&dt))
            .ok_or(Error::OrdinalTimestamps)
    }
}

/// One column per requested part, for every series in frame order. Future
/// values can be computed the same way from known future timestamps.
pub fn make_datetime_features(
    frame: &LongFrame,
    parts: &[DatePart],
) -> Result<Vec<Vec<Vec<f64>>>> {
    if !parts.is_empty() && !frame.frequency().is_calendar() {
        return Err(Error::OrdinalTimestamps);
    }
    let freq = frame.frequency();
    frame
        .series()
        .iter()
        .map(|s| {
            parts
                .iter()
                .map(|p| {
                    s.timestamps
                        .iter()
                        .map(|&t| p.at_tick(freq, t))
                        .collect::<Result<Vec<_>>>()
                })
                .collect()
        })
        .collect()
}
