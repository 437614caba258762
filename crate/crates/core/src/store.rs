//! Per-gram counts by hour, with daily aggregates derived on write.
//!
//! The hourly table is the source of truth. Daily totals are maintained
//! alongside it so that `daily_series` never has to re-sum 24 buckets.
//!
//! On disk a store is a sorted UTF-8 table, one `gram<TAB>stamp<TAB>count`
//! line per bucket. The stamp is `YYYY-MM-DDTHH` for hourly rows and
//! `YYYY-MM-DD` for daily rows. Daily rows carry no hour, so they are
//! credited to the first hour of their day.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::gram::Gram;
use crate::time::{self, TimeBucket, HOURS_PER_DAY};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt count file at byte {offset} (line {line}): {reason}")]
    Corrupt { offset: u64, line: usize, reason: String },
}

/// Daily counts of one gram over consecutive days.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySeries {
    pub gram: Option<Gram>,
    pub start_day: i64,
    pub values: Vec<u64>,
}

impl FrequencySeries {
    pub fn new(gram: Gram, start_day: i64, values: Vec<u64>) -> Self {
        FrequencySeries { gram: Some(gram), start_day, values }
    }

    /// A series not tied to any stored gram, starting at day 0.
    pub fn from_values(values: Vec<u64>) -> Self {
        FrequencySeries { gram: None, start_day: 0, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn peak(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GramStore {
    hourly: HashMap<Gram, BTreeMap<i64, u64>>,
    daily: HashMap<Gram, BTreeMap<i64, u64>>,
}

impl GramStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `delta` to the count of `gram` in `bucket`.
    ///
    /// A day bucket is credited to the first hour of that day.
    pub fn record(&mut self, gram: &Gram, bucket: TimeBucket, delta: u64) {
        if delta == 0 {
            return;
        }
        let hour = match bucket.kind {
            time::BucketKind::Hour => bucket.index,
            time::BucketKind::Day => bucket.index * HOURS_PER_DAY,
        };
        let day = bucket.day_index();
        if let Some(hours) = self.hourly.get_mut(gram) {
            *hours.entry(hour).or_insert(0) += delta;
            *self.daily.get_mut(gram).expect("daily mirrors hourly").entry(day).or_insert(0) += delta;
        } else {
            self.hourly.insert(gram.clone(), BTreeMap::from([(hour, delta)]));
            self.daily.insert(gram.clone(), BTreeMap::from([(day, delta)]));
        }
    }

    /// Folds every count of `other` into `self`.
    pub fn merge(&mut self, other: GramStore) {
        for (gram, hours) in other.hourly {
            for (h, c) in hours {
                self.record(&gram, TimeBucket::hour(h), c);
            }
        }
    }

    pub fn count(&self, gram: &Gram, bucket: TimeBucket) -> u64 {
        let table = match bucket.kind {
            time::BucketKind::Hour => &self.hourly,
            time::BucketKind::Day => &self.daily,
        };
        table.get(gram).and_then(|m| m.get(&bucket.index)).copied().unwrap_or(0)
    }

    pub fn num_grams(&self) -> usize {
        self.hourly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hourly.is_empty()
    }

    pub fn contains(&self, gram: &Gram) -> bool {
        self.hourly.contains_key(gram)
    }

    /// Unordered iterator over stored grams.
    pub fn grams(&self) -> impl Iterator<Item = &Gram> {
        self.hourly.keys()
    }

    /// Stored grams of `n` characters, sorted.
    pub fn grams_of_len(&self, n: usize) -> Vec<&Gram> {
        let mut v: Vec<&Gram> = self.hourly.keys().filter(|g| g.len() == n).collect();
        v.sort();
        v
    }

    /// Nonzero daily counts of a gram, keyed by day ordinal.
    pub fn daily_counts(&self, gram: &Gram) -> Option<&BTreeMap<i64, u64>> {
        self.daily.get(gram)
    }

    /// First and last day with any count, over all grams.
    pub fn day_span(&self) -> Option<(i64, i64)> {
        let mut span: Option<(i64, i64)> = None;
        for days in self.daily.values() {
            if let (Some((&lo, _)), Some((&hi, _))) = (days.first_key_value(), days.last_key_value()) {
                span = Some(match span {
                    None => (lo, hi),
                    Some((a, b)) => (a.min(lo), b.max(hi)),
                });
            }
        }
        span
    }

    pub fn daily_series(&self, gram: &Gram, start_day: i64, num_days: usize) -> FrequencySeries {
        let mut values = vec![0; num_days];
        if let Some(days) = self.daily.get(gram) {
            let end = start_day + num_days as i64;
            for (&d, &c) in days.range(start_day..end) {
                values[(d - start_day) as usize] = c;
            }
        }
        FrequencySeries::new(gram.clone(), start_day, values)
    }

    /// Largest single-day count of a gram over all time.
    pub fn peak_daily(&self, gram: &Gram) -> u64 {
        self.daily.get(gram).and_then(|m| m.values().copied().max()).unwrap_or(0)
    }

    /// Every gram whose peak single-day count is strictly above `min_total`,
    /// sorted.
    pub fn iterate_grams(&self, min_total: u64) -> Vec<Gram> {
        let mut v: Vec<Gram> = self
            .daily
            .iter()
            .filter(|(_, days)| days.values().any(|&c| c > min_total))
            .map(|(g, _)| g.clone())
            .collect();
        v.sort();
        v
    }

    fn sorted_rows(table: &HashMap<Gram, BTreeMap<i64, u64>>) -> Vec<(&Gram, &BTreeMap<i64, u64>)> {
        let mut rows: Vec<_> = table.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        rows
    }

    /// Writes the hourly table; this is the lossless format.
    pub fn write_hourly<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (gram, hours) in Self::sorted_rows(&self.hourly) {
            for (&h, &c) in hours {
                writeln!(out, "{gram}\t{}\t{c}", time::format_hour(h))?;
            }
        }
        out.flush()
    }

    /// Writes daily totals.
    pub fn write_daily<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (gram, days) in Self::sorted_rows(&self.daily) {
            for (&d, &c) in days {
                writeln!(out, "{gram}\t{}\t{c}", time::format_day(d))?;
            }
        }
        out.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let f = File::create(path)?;
        self.write_hourly(BufWriter::new(f))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::read(BufReader::new(File::open(path)?))
    }

    /// Parses a count table with hourly and/or daily rows.
    pub fn read<R: BufRead>(mut input: R) -> Result<Self, StoreError> {
        let mut store = GramStore::new();
        let mut buf = String::new();
        let mut offset = 0u64;
        let mut line_no = 0usize;
        loop {
            buf.clear();
            let n = match input.read_line(&mut buf) {
                Ok(n) => n,
                Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                    return Err(StoreError::Corrupt { offset, line: line_no + 1, reason: "invalid UTF-8".into() })
                }
                Err(e) => return Err(e.into()),
            };
            if n == 0 {
                break;
            }
            line_no += 1;
            let line = buf.trim_end_matches(['\n', '\r']);
            if !line.is_empty() {
                let (gram, bucket, count) =
                    parse_row(line).map_err(|reason| StoreError::Corrupt { offset, line: line_no, reason })?;
                store.record(&gram, bucket, count);
            }
            offset += n as u64;
        }
        Ok(store)
    }
}

fn parse_row(line: &str) -> Result<(Gram, TimeBucket, u64), String> {
    let mut fields = line.split('\t');
    let (Some(g), Some(stamp), Some(c), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
        return Err("expected 3 tab-separated fields".into());
    };
    let gram = Gram::new(g).map_err(|e| e.to_string())?;
    let bucket = if stamp.contains('T') {
        TimeBucket::hour(time::parse_hour(stamp).map_err(|e| e.to_string())?)
    } else {
        TimeBucket::day(time::parse_day(stamp).map_err(|e| e.to_string())?)
    };
    let count: u64 = c.parse().map_err(|_| format!("bad count `{c}`"))?;
    Ok((gram, bucket, count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> Gram {
        Gram::new(s).unwrap()
    }

    #[test]
    fn record_is_additive() {
        let mut s = GramStore::new();
        let h = TimeBucket::hour(1000);
        s.record(&g("ABC"), h, 2);
        s.record(&g("ABC"), h, 3);
        assert_eq!(s.count(&g("ABC"), h), 5);
        assert_eq!(s.count(&g("ABC"), TimeBucket::day(h.day_index())), 5);
        s.record(&g("XYZ"), h, 4);
        assert_eq!(s.count(&g("XYZ"), h), 4);
    }

    #[test]
    fn daily_series_fills_gaps() {
        let mut s = GramStore::new();
        s.record(&g("ABC"), TimeBucket::hour(10 * 24 + 5), 7);
        assert_eq!(s.daily_series(&g("ABC"), 8, 5).values, vec![0, 0, 7, 0, 0]);
        assert_eq!(s.daily_series(&g("QQQ"), 8, 5).values, vec![0; 5]);
    }

    #[test]
    fn peak_threshold_is_strict() {
        let mut s = GramStore::new();
        s.record(&g("ABC"), TimeBucket::day(3), 99);
        s.record(&g("ABD"), TimeBucket::day(3), 100);
        assert_eq!(s.iterate_grams(99), vec![g("ABD")]);
        assert_eq!(s.iterate_grams(0).len(), 2);
        assert!(GramStore::new().iterate_grams(0).is_empty());
    }

    #[test]
    fn empty_file_is_empty_store() {
        let s = GramStore::read(&b""[..]).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn corrupt_row_reports_offset() {
        let data = "ABC\t2011-10-26\t3\nABD\t2011-10-26\tx\n";
        match GramStore::read(data.as_bytes()) {
            Err(StoreError::Corrupt { offset, line, .. }) => {
                assert_eq!(offset, 17);
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hourly_round_trip() {
        let mut s = GramStore::new();
        s.record(&g("中华人"), TimeBucket::hour(360_000), 3);
        s.record(&g("中华人"), TimeBucket::hour(360_001), 1);
        s.record(&g("华"), TimeBucket::hour(360_030), 9);
        let mut buf = Vec::new();
        s.write_hourly(&mut buf).unwrap();
        assert_eq!(GramStore::read(&buf[..]).unwrap(), s);
    }
}
