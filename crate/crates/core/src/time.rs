//! Hour and day bucket ordinals.
//!
//! Bucket ordinals count from the Unix epoch after shifting timestamps by a
//! fixed offset, so day 0 is 1970-01-01 in the configured local time.

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECS_PER_HOUR: i64 = 3600;
pub const HOURS_PER_DAY: i64 = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeError {
    #[error("invalid date `{0}` (expected YYYY-MM-DD)")]
    BadDate(String),
    #[error("invalid hour stamp `{0}` (expected YYYY-MM-DDTHH)")]
    BadHour(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BucketKind {
    Hour,
    Day,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeBucket {
    pub kind: BucketKind,
    pub index: i64,
}

impl TimeBucket {
    pub fn hour(index: i64) -> Self {
        TimeBucket { kind: BucketKind::Hour, index }
    }

    pub fn day(index: i64) -> Self {
        TimeBucket { kind: BucketKind::Day, index }
    }

    /// Hour bucket of an epoch timestamp shifted by `offset_minutes`.
    pub fn of_timestamp(ts: i64, offset_minutes: i64) -> Self {
        TimeBucket::hour((ts + offset_minutes * 60).div_euclid(SECS_PER_HOUR))
    }

    /// Day ordinal containing this bucket.
    pub fn day_index(self) -> i64 {
        match self.kind {
            BucketKind::Hour => self.index.div_euclid(HOURS_PER_DAY),
            BucketKind::Day => self.index,
        }
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

pub fn date_to_day(date: NaiveDate) -> i64 {
    (date - epoch()).num_days()
}

pub fn day_to_date(day: i64) -> NaiveDate {
    epoch() + Duration::days(day)
}

pub fn parse_date(s: &str) -> Result<NaiveDate, TimeError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| TimeError::BadDate(s.to_owned()))
}

pub fn parse_day(s: &str) -> Result<i64, TimeError> {
    parse_date(s).map(date_to_day)
}

pub fn format_day(day: i64) -> String {
    day_to_date(day).format("%Y-%m-%d").to_string()
}

/// Parses `YYYY-MM-DDTHH` into an hour ordinal.
pub fn parse_hour(s: &str) -> Result<i64, TimeError> {
    let bad = || TimeError::BadHour(s.to_owned());
    let (date, hh) = s.split_once('T').ok_or_else(bad)?;
    if hh.len() != 2 {
        return Err(bad());
    }
    let h: i64 = hh.parse().map_err(|_| bad())?;
    if !(0..HOURS_PER_DAY).contains(&h) {
        return Err(bad());
    }
    let day = parse_day(date).map_err(|_| bad())?;
    Ok(day * HOURS_PER_DAY + h)
}

pub fn format_hour(hour: i64) -> String {
    let day = hour.div_euclid(HOURS_PER_DAY);
    format!("{}T{:02}", format_day(day), hour.rem_euclid(HOURS_PER_DAY))
}

/// A contiguous run of days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DayWindow {
    pub start: i64,
    pub days: usize,
}

impl DayWindow {
    pub fn new(start: i64, days: usize) -> Self {
        DayWindow { start, days }
    }

    pub fn from_date(start: NaiveDate, days: usize) -> Self {
        DayWindow::new(date_to_day(start), days)
    }

    /// Last day, inclusive.
    pub fn end(&self) -> i64 {
        self.start + self.days as i64 - 1
    }

    pub fn contains(&self, day: i64) -> bool {
        day >= self.start && day <= self.end()
    }

    /// Window of `before + 1 + after` days with `center` at index `before`.
    pub fn around(center: i64, before: usize, after: usize) -> Self {
        DayWindow::new(center - before as i64, before + 1 + after)
    }
}
