//! Per-root choice of trend vector kind.
//!
//! Six features summarise a root's window series. A one-vs-rest linear SVM
//! over standardised features picks FT, DFT or CFT; without a trained model
//! a fixed heuristic is used instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, BufRead};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gram::Gram;
use crate::store::{FrequencySeries, GramStore};
use crate::time;
use crate::timeseries::{self, SeriesError, VectorKind};

pub const NUM_FEATURES: usize = 6;

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("training needs at least two distinct labels")]
    Degenerate,
    #[error("training set is empty")]
    Empty,
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootFeatures {
    pub flatness: f64,
    pub max_change_rate: f64,
    pub min_ft: f64,
    pub max_ft: f64,
    pub mean_ft: f64,
    pub period_len: usize,
}

impl RootFeatures {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [self.flatness, self.max_change_rate, self.min_ft, self.max_ft, self.mean_ft, self.period_len as f64]
    }
}

/// Computes the six selector features; `epsilon` smooths the change rate.
pub fn features(series: &FrequencySeries, epsilon: f64) -> Result<RootFeatures, SelectorError> {
    if series.len() < 2 {
        return Err(SeriesError::TooShort { len: series.len(), need: 2 }.into());
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SeriesError::BadEpsilon(epsilon).into());
    }
    let ft: Vec<f64> = series.values.iter().map(|&c| c as f64).collect();
    let max_change_rate = ft.windows(2).map(|w| (w[1] + epsilon) / (w[0] + epsilon)).fold(f64::NEG_INFINITY, f64::max);
    let min_ft = ft.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ft = ft.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_ft = ft.iter().sum::<f64>() / ft.len() as f64;
    Ok(RootFeatures {
        flatness: timeseries::flatness(series).value_or_zero(),
        max_change_rate,
        min_ft,
        max_ft,
        mean_ft,
        period_len: series.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    /// Hinge-loss penalty.
    pub c: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams { c: 10.0, max_epochs: 2000, tolerance: 1e-6, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorModel {
    pub mean: [f64; NUM_FEATURES],
    pub scale: [f64; NUM_FEATURES],
    /// Indexed by `VectorKind::index()`.
    pub weights: [[f64; NUM_FEATURES]; 3],
    pub bias: [f64; 3],
}

impl SelectorModel {
    fn normalise(&self, f: &RootFeatures) -> [f64; NUM_FEATURES] {
        let mut x = f.to_array();
        for (i, v) in x.iter_mut().enumerate() {
            *v = (*v - self.mean[i]) / self.scale[i];
        }
        x
    }

    pub fn scores(&self, f: &RootFeatures) -> [f64; 3] {
        let x = self.normalise(f);
        let mut out = [0.0; 3];
        for (k, s) in out.iter_mut().enumerate() {
            *s = self.weights[k].iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + self.bias[k];
        }
        out
    }

    /// Argmax score; ties go to the earlier kind in FT, DFT, CFT order.
    pub fn predict(&self, f: &RootFeatures) -> VectorKind {
        let s = self.scores(f);
        let mut best = 0;
        for k in 1..3 {
            if s[k] > s[best] {
                best = k;
            }
        }
        VectorKind::ALL[best]
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        writeln!(out, "mean = {}", join(&self.mean)).unwrap();
        writeln!(out, "scale = {}", join(&self.scale)).unwrap();
        for kind in VectorKind::ALL {
            writeln!(out, "{kind}.weights = {}", join(&self.weights[kind.index()])).unwrap();
            writeln!(out, "{kind}.bias = {}", self.bias[kind.index()]).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SelectorError> {
        let mut entries: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| SelectorError::Parse { line: i + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = values`".into()))?;
            let nums = value
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad number `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            if nums.iter().any(|v| !v.is_finite()) {
                return Err(err("non-finite value".into()));
            }
            entries.insert(key.trim().to_owned(), (i + 1, nums));
        }
        let get = |key: &str, len: usize| -> Result<Vec<f64>, SelectorError> {
            match entries.get(key) {
                Some((_, v)) if v.len() == len => Ok(v.clone()),
                Some((line, v)) => Err(SelectorError::Parse {
                    line: *line,
                    reason: format!("`{key}` needs {len} values, got {}", v.len()),
                }),
                None => Err(SelectorError::Parse { line: 0, reason: format!("missing key `{key}`") }),
            }
        };
        let arr = |v: Vec<f64>| -> [f64; NUM_FEATURES] { v.try_into().expect("length checked") };
        let mut model = SelectorModel {
            mean: arr(get("mean", NUM_FEATURES)?),
            scale: arr(get("scale", NUM_FEATURES)?),
            weights: [[0.0; NUM_FEATURES]; 3],
            bias: [0.0; 3],
        };
        if model.scale.iter().any(|&s| s <= 0.0) {
            return Err(SelectorError::Parse { line: 0, reason: "scale entries must be positive".into() });
        }
        for kind in VectorKind::ALL {
            model.weights[kind.index()] = arr(get(&format!("{kind}.weights"), NUM_FEATURES)?);
            model.bias[kind.index()] = get(&format!("{kind}.bias"), 1)?[0];
        }
        Ok(model)
    }
}

/// Fits one binary linear SVM per kind by dual coordinate descent on the
/// hinge loss, with the bias folded in as a constant feature.
pub fn train(examples: &[(RootFeatures, VectorKind)], params: &TrainParams) -> Result<SelectorModel, SelectorError> {
    if examples.is_empty() {
        return Err(SelectorError::Empty);
    }
    let first = examples[0].1;
    if examples.iter().all(|(_, k)| *k == first) {
        return Err(SelectorError::Degenerate);
    }

    let n = examples.len() as f64;
    let mut mean = [0.0; NUM_FEATURES];
    let mut scale = [0.0; NUM_FEATURES];
    for (f, _) in examples {
        for (m, v) in mean.iter_mut().zip(f.to_array()) {
            *m += v / n;
        }
    }
    for (f, _) in examples {
        for (i, v) in f.to_array().into_iter().enumerate() {
            scale[i] += (v - mean[i]).powi(2) / n;
        }
    }
    for s in scale.iter_mut() {
        *s = s.sqrt();
        if s.is_nan() || *s <= 1e-12 || !s.is_finite() {
            *s = 1.0;
        }
    }
    let mut model = SelectorModel { mean, scale, weights: [[0.0; NUM_FEATURES]; 3], bias: [0.0; 3] };

    // Augmented rows: standardised features plus a constant 1 for the bias.
    let rows: Vec<[f64; NUM_FEATURES + 1]> = examples
        .iter()
        .map(|(f, _)| {
            let x = model.normalise(f);
            let mut r = [1.0; NUM_FEATURES + 1];
            r[..NUM_FEATURES].copy_from_slice(&x);
            r
        })
        .collect();

    for kind in VectorKind::ALL {
        let y: Vec<f64> = examples.iter().map(|(_, k)| if *k == kind { 1.0 } else { -1.0 }).collect();
        let w = dual_cd(&rows, &y, params);
        model.weights[kind.index()].copy_from_slice(&w[..NUM_FEATURES]);
        model.bias[kind.index()] = w[NUM_FEATURES];
    }
    Ok(model)
}

fn dual_cd<const D: usize>(rows: &[[f64; D]], y: &[f64], params: &TrainParams) -> [f64; D] {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = [0.0; D];
    let mut alpha = vec![0.0; rows.len()];
    let q: Vec<f64> = rows.iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let g = y[i] * rows[i].iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == params.c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / q[i]).clamp(0.0, params.c);
                let step = (alpha[i] - old) * y[i];
                for (wj, xj) in w.iter_mut().zip(&rows[i]) {
                    *wj += step * xj;
                }
            }
        }
        if pg_max - pg_min < params.tolerance {
            break;
        }
    }
    w
}

/// Model prediction when available, otherwise: CFT if the max change rate
/// exceeds 10, else DFT if flatness is below 0.9, else FT.
pub fn select(features: &RootFeatures, model: Option<&SelectorModel>) -> VectorKind {
    match model {
        Some(m) => m.predict(features),
        None if features.max_change_rate > 10.0 => VectorKind::Cft,
        None if features.flatness < 0.9 => VectorKind::Dft,
        None => VectorKind::Ft,
    }
}

/// Reads `gram<TAB>from_date<TAB>days<TAB>label` lines and computes each
/// example's features from `store`.
pub fn read_labels<R: BufRead>(
    input: R,
    store: &GramStore,
    epsilon: f64,
) -> Result<Vec<(RootFeatures, VectorKind)>, SelectorError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| SelectorError::Parse { line: i + 1, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        let [g, date, days, label] = fields[..] else {
            return Err(err(format!("expected 4 tab-separated fields, got {}", fields.len())));
        };
        let gram = Gram::new(g).map_err(|e| err(e.to_string()))?;
        let start = time::parse_day(date).map_err(|e| err(e.to_string()))?;
        let days: usize = days.parse().map_err(|_| err(format!("bad day count `{days}`")))?;
        let kind: VectorKind = label.parse().map_err(err)?;
        let series = store.daily_series(&gram, start, days);
        out.push((features(&series, epsilon)?, kind));
    }
    Ok(out)
}
