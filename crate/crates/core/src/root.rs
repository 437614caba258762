//! Root trigram validity: a root must be neither mostly zeros nor flat.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gram::Gram;
use crate::store::FrequencySeries;
use crate::timeseries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootConfig {
    /// Flatness at or above this marks the series too flat.
    pub flatness_threshold: f64,
    /// Zero fraction strictly above this marks the series too sparse.
    pub max_zero_fraction: f64,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig { flatness_threshold: 0.98, max_zero_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootReason {
    Ok,
    TooSparse,
    TooFlat,
}

impl fmt::Display for RootReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootReason::Ok => "OK",
            RootReason::TooSparse => "TOO_SPARSE",
            RootReason::TooFlat => "TOO_FLAT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootVerdict {
    pub gram: Option<Gram>,
    pub valid: bool,
    pub reason: RootReason,
    /// Cosine of FT against all-ones; 0 for an all-zero series.
    pub flatness: f64,
    pub zero_fraction: f64,
}

impl fmt::Display for RootVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} flatness={:.6} zero_fraction={:.6}", self.reason, self.flatness, self.zero_fraction)
    }
}

/// Sparsity is checked before flatness.
pub fn is_valid_root(series: &FrequencySeries, config: &RootConfig) -> RootVerdict {
    let n = series.len().max(1) as f64;
    let zeros = series.values.iter().filter(|&&c| c == 0).count() as f64;
    let zero_fraction = if series.is_empty() { 1.0 } else { zeros / n };
    let flatness = timeseries::flatness(series).value_or_zero();
    let reason = if zero_fraction > config.max_zero_fraction {
        RootReason::TooSparse
    } else if flatness >= config.flatness_threshold {
        RootReason::TooFlat
    } else {
        RootReason::Ok
    };
    RootVerdict { gram: series.gram.clone(), valid: reason == RootReason::Ok, reason, flatness, zero_fraction }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(v: &[u64]) -> RootVerdict {
        is_valid_root(&FrequencySeries::from_values(v.to_vec()), &RootConfig::default())
    }

    #[test]
    fn all_zero_is_sparse() {
        let v = verdict(&[0; 15]);
        assert_eq!(v.reason, RootReason::TooSparse);
        assert_eq!(v.zero_fraction, 1.0);
        assert!(!v.valid);
    }

    #[test]
    fn constant_is_flat() {
        let v = verdict(&[7; 15]);
        assert_eq!(v.reason, RootReason::TooFlat);
        assert_eq!(v.flatness, 1.0);
    }

    #[test]
    fn thirteen_zeros_two_ones() {
        let mut s = [0u64; 15];
        s[4] = 1;
        s[9] = 1;
        assert_eq!(verdict(&s).reason, RootReason::TooSparse);
    }

    #[test]
    fn exactly_half_zero_is_not_sparse() {
        let v = verdict(&[0, 0, 1, 9]);
        assert_eq!(v.zero_fraction, 0.5);
        assert_eq!(v.reason, RootReason::Ok);
    }

    #[test]
    fn threshold_is_inclusive() {
        let series = FrequencySeries::from_values(vec![1, 2, 3, 4]);
        let f = timeseries::flatness(&series).value_or_zero();
        let cfg = RootConfig { flatness_threshold: f, ..Default::default() };
        assert_eq!(is_valid_root(&series, &cfg).reason, RootReason::TooFlat);
        let cfg = RootConfig { flatness_threshold: f + 1e-12, ..Default::default() };
        assert_eq!(is_valid_root(&series, &cfg).reason, RootReason::Ok);
    }
}
