//! Trend vectors (FT, DFT, CFT) and cosine similarity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gram::Gram;
use crate::store::FrequencySeries;

/// Additive smoothing for CFT and change rates (add-one in count units).
pub const DEFAULT_EPSILON: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("series too short: need at least {need} days, got {len}")]
    TooShort { len: usize, need: usize },
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cannot compare {0} with {1}")]
    KindMismatch(VectorKind, VectorKind),
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VectorKind {
    #[serde(rename = "FT")]
    Ft,
    #[serde(rename = "DFT")]
    Dft,
    #[serde(rename = "CFT")]
    Cft,
}

impl VectorKind {
    pub const ALL: [VectorKind; 3] = [VectorKind::Ft, VectorKind::Dft, VectorKind::Cft];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for VectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorKind::Ft => "FT",
            VectorKind::Dft => "DFT",
            VectorKind::Cft => "CFT",
        })
    }
}

impl FromStr for VectorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ft" => Ok(VectorKind::Ft),
            "dft" => Ok(VectorKind::Dft),
            "cft" => Ok(VectorKind::Cft),
            _ => Err(format!("unknown vector kind `{s}` (expected ft|dft|cft)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendVector {
    pub kind: VectorKind,
    pub values: Vec<f64>,
    pub source_gram: Option<Gram>,
    pub start_day: i64,
}

impl TrendVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn require_len(series: &FrequencySeries, need: usize) -> Result<(), SeriesError> {
    if series.len() < need {
        return Err(SeriesError::TooShort { len: series.len(), need });
    }
    Ok(())
}

fn vector(kind: VectorKind, series: &FrequencySeries, values: Vec<f64>) -> TrendVector {
    TrendVector { kind, values, source_gram: series.gram.clone(), start_day: series.start_day }
}

/// Daily frequency as reals.
pub fn ft(series: &FrequencySeries) -> TrendVector {
    vector(VectorKind::Ft, series, series.values.iter().map(|&c| c as f64).collect())
}

/// Day-over-day difference: `FT[i+1] - FT[i]`.
pub fn dft(series: &FrequencySeries) -> Result<TrendVector, SeriesError> {
    require_len(series, 2)?;
    let values = series.values.windows(2).map(|w| w[1] as f64 - w[0] as f64).collect();
    Ok(vector(VectorKind::Dft, series, values))
}

/// Smoothed log10 ratio: `log10((FT[i+1] + eps) / (FT[i] + eps))`.
pub fn cft(series: &FrequencySeries, epsilon: f64) -> Result<TrendVector, SeriesError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SeriesError::BadEpsilon(epsilon));
    }
    require_len(series, 2)?;
    let values =
        series.values.windows(2).map(|w| ((w[1] as f64 + epsilon) / (w[0] as f64 + epsilon)).log10()).collect();
    Ok(vector(VectorKind::Cft, series, values))
}

pub fn trend_vector(series: &FrequencySeries, kind: VectorKind, epsilon: f64) -> Result<TrendVector, SeriesError> {
    match kind {
        VectorKind::Ft => {
            require_len(series, 1)?;
            Ok(ft(series))
        }
        VectorKind::Dft => dft(series),
        VectorKind::Cft => cft(series, epsilon),
    }
}

/// Result of a cosine comparison. `Undefined` arises when either vector has
/// zero norm; ranking code treats it as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Similarity {
    Defined(f64),
    Undefined,
}

impl Similarity {
    pub fn value_or_zero(self) -> f64 {
        match self {
            Similarity::Defined(v) => v,
            Similarity::Undefined => 0.0,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Similarity::Defined(_))
    }
}

/// Cosine of two equal-length slices.
pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<Similarity, SeriesError> {
    if a.len() != b.len() {
        return Err(SeriesError::LengthMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Ok(Similarity::Undefined);
    }
    // One square root keeps constant-vs-ones exactly 1.0 for integer counts.
    Ok(Similarity::Defined(dot / (aa * bb).sqrt()))
}

pub fn cosine(a: &TrendVector, b: &TrendVector) -> Result<Similarity, SeriesError> {
    if a.kind != b.kind {
        return Err(SeriesError::KindMismatch(a.kind, b.kind));
    }
    cosine_slices(&a.values, &b.values)
}

/// Cosine of a series' FT against the all-ones vector of the same length.
pub fn flatness(series: &FrequencySeries) -> Similarity {
    let v = ft(series);
    let ones = vec![1.0; v.len()];
    cosine_slices(&v.values, &ones).expect("equal lengths")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[u64]) -> FrequencySeries {
        FrequencySeries::from_values(v.to_vec())
    }

    #[test]
    fn ft_is_identity() {
        assert_eq!(ft(&s(&[15, 56, 5])).values, vec![15.0, 56.0, 5.0]);
        assert_eq!(ft(&s(&[0, 0])).values, vec![0.0, 0.0]);
    }

    #[test]
    fn dft_basic() {
        assert_eq!(dft(&s(&[5, 5, 5, 5])).unwrap().values, vec![0.0; 3]);
        assert_eq!(dft(&s(&[1, 68, 5])).unwrap().values, vec![67.0, -63.0]);
        assert_eq!(dft(&s(&[1])), Err(SeriesError::TooShort { len: 1, need: 2 }));
    }

    #[test]
    fn cft_basic() {
        assert_eq!(cft(&s(&[5, 5, 5]), 1.0).unwrap().values, vec![0.0, 0.0]);
        assert_eq!(cft(&s(&[0, 99]), 1.0).unwrap().values, vec![2.0]);
        let d = cft(&s(&[1, 2, 4, 8]), 1e-12).unwrap();
        for v in d.values {
            assert!((v - 2f64.log10()).abs() < 1e-9);
        }
        assert!(cft(&s(&[1, 2]), 0.0).is_err());
        assert!(cft(&s(&[1]), 1.0).is_err());
    }

    #[test]
    fn cosine_basics() {
        let one = cosine_slices(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(one, Similarity::Defined(0.0));
        let same = cosine_slices(&[3.0, 4.0, 5.0], &[3.0, 4.0, 5.0]).unwrap().value_or_zero();
        assert!((same - 1.0).abs() < 1e-12);
        assert_eq!(cosine_slices(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), Similarity::Undefined);
        assert_eq!(cosine_slices(&[1.0], &[1.0, 2.0]), Err(SeriesError::LengthMismatch(1, 2)));
    }

    #[test]
    fn cosine_rejects_mixed_kinds() {
        let a = ft(&s(&[1, 2, 3]));
        let b = dft(&s(&[1, 2, 3, 4])).unwrap();
        assert_eq!(cosine(&a, &b), Err(SeriesError::KindMismatch(VectorKind::Ft, VectorKind::Dft)));
    }

    #[test]
    fn flatness_of_constant_is_one() {
        assert_eq!(flatness(&s(&[7; 15])), Similarity::Defined(1.0));
    }
}
