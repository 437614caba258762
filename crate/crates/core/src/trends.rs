//! Change-rate scan for trending trigrams, and connection of each hit over
//! an 11-day window centred on the spike.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connector::{ConnectError, Connection, Connector, ConnectorConfig};
use crate::gram::Gram;
use crate::root::RootVerdict;
use crate::store::GramStore;
use crate::time::DayWindow;

/// Days on each side of the spike in a hit's analysis window.
pub const HALF_WINDOW: usize = 5;
/// Length of the trailing mean in [`Baseline::TrailingAvg`].
pub const TRAILING_DAYS: usize = 7;

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("date range of {days} days is too short; {baseline} needs at least {need}")]
    RangeTooShort { days: usize, need: usize, baseline: Baseline },
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Baseline {
    /// The previous day's count.
    #[default]
    PrevDay,
    /// Mean of the previous seven days.
    TrailingAvg,
}

impl Baseline {
    /// Days of history needed before the first scannable day.
    pub fn lookback(self) -> usize {
        match self {
            Baseline::PrevDay => 1,
            Baseline::TrailingAvg => TRAILING_DAYS,
        }
    }
}

impl FromStr for Baseline {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prev" | "prev_day" => Ok(Baseline::PrevDay),
            "avg7" | "trailing_avg" => Ok(Baseline::TrailingAvg),
            other => Err(format!("unknown baseline `{other}` (expected prev|avg7)")),
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::PrevDay => "prev",
            Baseline::TrailingAvg => "avg7",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    pub threshold: f64,
    pub epsilon: f64,
    pub baseline: Baseline,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig { threshold: 100.0, epsilon: 1.0, baseline: Baseline::PrevDay }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendHit {
    pub gram: Gram,
    pub spike_day: i64,
    pub change_rate: f64,
    /// Eleven days with the spike at index 5.
    pub window: DayWindow,
}

/// `(today + eps) / (baseline + eps)`.
pub fn change_rate(today: f64, baseline: f64, epsilon: f64) -> f64 {
    (today + epsilon) / (baseline + epsilon)
}

/// Rates for each day of `values` that has enough history, paired with
/// its offset into `values`.
fn rates<'a>(values: &'a [u64], config: &'a TrendConfig) -> impl Iterator<Item = (usize, f64)> + 'a {
    let look = config.baseline.lookback();
    let eps = config.epsilon;
    (look..values.len()).map(move |i| {
        let base = match config.baseline {
            Baseline::PrevDay => values[i - 1] as f64,
            Baseline::TrailingAvg => values[i - look..i].iter().sum::<u64>() as f64 / look as f64,
        };
        (i, change_rate(values[i] as f64, base, eps))
    })
}

/// Every (trigram, day) in `range` whose change rate exceeds the threshold.
///
/// Baselines are taken from inside `range`, so the first scanned day is
/// `range.start + lookback`. Output is sorted by gram, then day.
pub fn scan(
    store: &GramStore,
    range: DayWindow,
    config: &TrendConfig,
    threads: usize,
) -> Result<Vec<TrendHit>, TrendError> {
    if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
        return Err(TrendError::BadEpsilon(config.epsilon));
    }
    let need = config.baseline.lookback() + 1;
    if range.days < need {
        return Err(TrendError::RangeTooShort { days: range.days, need, baseline: config.baseline });
    }
    let grams = store.grams_of_len(3);
    let per_gram = |g: &&Gram| -> Vec<TrendHit> {
        let series = store.daily_series(g, range.start, range.days);
        rates(&series.values, config)
            .filter(|&(_, r)| r > config.threshold)
            .map(|(i, r)| {
                let day = range.start + i as i64;
                TrendHit {
                    gram: (*g).clone(),
                    spike_day: day,
                    change_rate: r,
                    window: DayWindow::around(day, HALF_WINDOW, HALF_WINDOW),
                }
            })
            .collect()
    };
    let mut hits: Vec<TrendHit> = if threads <= 1 {
        grams.iter().flat_map(per_gram).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build();
        match pool {
            Ok(p) => p.install(|| grams.par_iter().flat_map_iter(per_gram).collect()),
            Err(_) => grams.iter().flat_map(per_gram).collect(),
        }
    };
    hits.sort_by(|a, b| a.gram.cmp(&b.gram).then(a.spike_day.cmp(&b.spike_day)));
    Ok(hits)
}

#[derive(Debug)]
pub enum HitOutcome {
    Connected(Connection),
    /// The hit's gram is not a valid root over its window.
    Skipped(RootVerdict),
    Failed(ConnectError),
}

/// Connects each hit over its own window; failures are recorded per hit.
pub fn trends_to_phrases(
    hits: &[TrendHit],
    connector: &Connector<'_>,
    base: &ConnectorConfig,
    threads: usize,
) -> Vec<(TrendHit, HitOutcome)> {
    let jobs: Vec<(Gram, ConnectorConfig)> =
        hits.iter().map(|h| (h.gram.clone(), ConnectorConfig { window: h.window, ..base.clone() })).collect();
    let results = connector.connect_many(&jobs, threads);
    hits.iter()
        .cloned()
        .zip(results)
        .map(|(h, r)| {
            let outcome = match r {
                Ok(c) => HitOutcome::Connected(c),
                Err(ConnectError::InvalidRoot { verdict, .. }) => HitOutcome::Skipped(verdict),
                Err(e) => HitOutcome::Failed(e),
            };
            (h, outcome)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeBucket;

    fn store_with(gram: &str, values: &[u64]) -> GramStore {
        let mut s = GramStore::new();
        for (d, &c) in values.iter().enumerate() {
            s.record(&Gram::new(gram).unwrap(), TimeBucket::day(d as i64), c);
        }
        s
    }

    #[test]
    fn prev_day_arithmetic() {
        let cfg = TrendConfig::default();
        let s = store_with("ABC", &[3, 1, 150, 0, 200, 4]);
        let hits = scan(&s, DayWindow::new(0, 6), &cfg, 1).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].spike_day, 4);
        assert_eq!(hits[0].change_rate, 201.0);
        assert_eq!(change_rate(150.0, 1.0, 1.0), 75.5);
    }

    #[test]
    fn constant_never_flags() {
        let s = store_with("ABC", &[9; 12]);
        for baseline in [Baseline::PrevDay, Baseline::TrailingAvg] {
            let cfg = TrendConfig { threshold: 1.0 - 1e-9, baseline, ..Default::default() };
            let hits = scan(&s, DayWindow::new(0, 12), &cfg, 1).unwrap();
            assert!(hits.iter().all(|h| h.change_rate == 1.0));
            let cfg = TrendConfig { baseline, ..Default::default() };
            assert!(scan(&s, DayWindow::new(0, 12), &cfg, 1).unwrap().is_empty());
        }
    }

    #[test]
    fn silent_week_then_burst() {
        let mut v = vec![0; 7];
        v.extend([500, 20, 3]);
        let s = store_with("万为开", &v);
        let cfg = TrendConfig { baseline: Baseline::TrailingAvg, ..Default::default() };
        let hits = scan(&s, DayWindow::new(0, 10), &cfg, 1).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].change_rate, 501.0);
        assert_eq!(hits[0].window, DayWindow::new(2, 11));
    }

    #[test]
    fn short_ranges_rejected() {
        let s = GramStore::new();
        assert!(scan(&s, DayWindow::new(0, 1), &TrendConfig::default(), 1).is_err());
        let avg = TrendConfig { baseline: Baseline::TrailingAvg, ..Default::default() };
        assert!(scan(&s, DayWindow::new(0, 7), &avg, 1).is_err());
        assert!(scan(&s, DayWindow::new(0, 8), &avg, 1).unwrap().is_empty());
    }
}
