//! Lexicon-constrained (LCP) and unconstrained (UP) precision.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker used in result files for roots that failed validation.
pub const INVALID_ROOT: &str = "INVALID_ROOT";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no valid roots: empty denominator")]
    EmptyDenominator,
    #[error("judged phrase `{0}` does not appear in any run")]
    UnknownJudgment(String),
    #[error("strata thresholds must be strictly decreasing")]
    UnorderedStrata,
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub root: String,
    /// Top phrase, or `None` when the root was invalid.
    pub result: Option<String>,
    /// Root's peak single-day frequency, for stratification.
    pub peak: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Match,
    Correct,
    Wrong,
    InvalidRoot,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Match => "MATCH",
            Verdict::Correct => "CORRECT",
            Verdict::Wrong => "WRONG",
            Verdict::InvalidRoot => "INVALID_ROOT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub root: String,
    pub result: Option<String>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub valid_roots: usize,
    pub invalid_roots: usize,
    pub lexicon_matches: usize,
    pub human_correct_extra: usize,
    pub wrong: usize,
    pub lcp: f64,
    pub up: f64,
    pub ledger: Vec<LedgerEntry>,
}

fn score(runs: &[&Run], lexicon: &HashSet<String>, judgments: &HashMap<String, bool>) -> Result<EvalReport, EvalError> {
    let mut r = EvalReport {
        valid_roots: 0,
        invalid_roots: 0,
        lexicon_matches: 0,
        human_correct_extra: 0,
        wrong: 0,
        lcp: 0.0,
        up: 0.0,
        ledger: Vec::with_capacity(runs.len()),
    };
    for run in runs {
        let verdict = match &run.result {
            None => Verdict::InvalidRoot,
            Some(p) => {
                let p = p.trim();
                if lexicon.contains(p) {
                    Verdict::Match
                } else if judgments.get(p).copied().unwrap_or(false) {
                    Verdict::Correct
                } else {
                    Verdict::Wrong
                }
            }
        };
        match verdict {
            Verdict::Match => r.lexicon_matches += 1,
            Verdict::Correct => r.human_correct_extra += 1,
            Verdict::Wrong => r.wrong += 1,
            Verdict::InvalidRoot => r.invalid_roots += 1,
        }
        r.ledger.push(LedgerEntry { root: run.root.clone(), result: run.result.clone(), verdict });
    }
    r.valid_roots = r.lexicon_matches + r.human_correct_extra + r.wrong;
    if r.valid_roots == 0 {
        return Err(EvalError::EmptyDenominator);
    }
    let n = r.valid_roots as f64;
    r.lcp = r.lexicon_matches as f64 / n;
    r.up = (r.lexicon_matches + r.human_correct_extra) as f64 / n;
    Ok(r)
}

fn check_judgments(runs: &[Run], judgments: &HashMap<String, bool>) -> Result<(), EvalError> {
    let seen: HashSet<&str> = runs.iter().filter_map(|r| r.result.as_deref()).map(str::trim).collect();
    let mut unknown: Vec<&String> = judgments.keys().filter(|p| !seen.contains(p.as_str())).collect();
    unknown.sort();
    match unknown.first() {
        Some(p) => Err(EvalError::UnknownJudgment((*p).clone())),
        None => Ok(()),
    }
}

/// Classifies each run as MATCH (exact lexicon hit), CORRECT (human-judged),
/// WRONG, or INVALID_ROOT, and computes LCP and UP over the valid roots.
pub fn evaluate(
    runs: &[Run],
    lexicon: &HashSet<String>,
    judgments: &HashMap<String, bool>,
) -> Result<EvalReport, EvalError> {
    check_judgments(runs, judgments)?;
    score(&runs.iter().collect::<Vec<_>>(), lexicon, judgments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    /// `None` for the single all-runs stratum.
    pub threshold: Option<u64>,
    /// `None` when the stratum has no valid roots.
    pub report: Option<EvalReport>,
}

/// One report per threshold over the runs whose peak exceeds it.
///
/// Strata are cumulative. With no thresholds a single stratum holds every
/// run. Runs without a peak only enter the unthresholded stratum.
pub fn stratify(
    runs: &[Run],
    thresholds: &[u64],
    lexicon: &HashSet<String>,
    judgments: &HashMap<String, bool>,
) -> Result<Vec<Stratum>, EvalError> {
    if thresholds.windows(2).any(|w| w[0] <= w[1]) {
        return Err(EvalError::UnorderedStrata);
    }
    check_judgments(runs, judgments)?;
    let build = |threshold: Option<u64>, members: Vec<&Run>| -> Result<Stratum, EvalError> {
        let report = match score(&members, lexicon, judgments) {
            Ok(r) => Some(r),
            Err(EvalError::EmptyDenominator) => None,
            Err(e) => return Err(e),
        };
        Ok(Stratum { threshold, report })
    };
    if thresholds.is_empty() {
        return Ok(vec![build(None, runs.iter().collect())?]);
    }
    thresholds
        .iter()
        .map(|&t| build(Some(t), runs.iter().filter(|r| r.peak.is_some_and(|p| p > t)).collect()))
        .collect()
}

pub fn read_lexicon<R: BufRead>(input: R) -> Result<HashSet<String>, EvalError> {
    let mut out = HashSet::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() {
            out.insert(t.to_owned());
        }
    }
    Ok(out)
}

/// `phrase<TAB>1|0` lines.
pub fn read_judgments<R: BufRead>(input: R) -> Result<HashMap<String, bool>, EvalError> {
    let mut out = HashMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: &str| EvalError::Parse { line: i + 1, reason: reason.to_owned() };
        let (phrase, flag) =
            line.trim_end_matches('\r').rsplit_once('\t').ok_or_else(|| err("expected phrase<TAB>1|0"))?;
        let ok = match flag.trim() {
            "1" => true,
            "0" => false,
            _ => return Err(err("judgment must be 1 or 0")),
        };
        out.insert(phrase.trim().to_owned(), ok);
    }
    Ok(out)
}

/// `root<TAB>result[<TAB>peak[<TAB>...]]` lines; a result of
/// `INVALID_ROOT` marks a rejected root. Extra columns are ignored.
pub fn read_runs<R: BufRead>(input: R) -> Result<Vec<Run>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(root), Some(result)) = (fields.next(), fields.next()) else {
            return Err(EvalError::Parse { line: i + 1, reason: "expected root<TAB>result".into() });
        };
        let peak = match fields.next().map(str::trim) {
            None | Some("") => None,
            Some(p) => {
                Some(p.parse().map_err(|_| EvalError::Parse { line: i + 1, reason: format!("bad peak `{p}`") })?)
            }
        };
        let result = (result != INVALID_ROOT).then(|| result.to_owned());
        out.push(Run { root: root.to_owned(), result, peak });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(root: &str, result: Option<&str>, peak: Option<u64>) -> Run {
        Run { root: root.into(), result: result.map(Into::into), peak }
    }

    #[test]
    fn all_in_lexicon() {
        let runs = vec![run("a", Some("abc"), None), run("b", Some("bcd"), None)];
        let lex: HashSet<String> = ["abc", "bcd"].map(String::from).into();
        let r = evaluate(&runs, &lex, &HashMap::new()).unwrap();
        assert_eq!((r.lcp, r.up), (1.0, 1.0));
    }

    #[test]
    fn nothing_matches() {
        let runs = vec![run("a", Some("abc"), None), run("x", None, None)];
        let r = evaluate(&runs, &HashSet::new(), &HashMap::new()).unwrap();
        assert_eq!((r.lcp, r.up, r.valid_roots, r.invalid_roots), (0.0, 0.0, 1, 1));
    }

    #[test]
    fn empty_denominator() {
        let runs = vec![run("x", None, None)];
        assert!(matches!(evaluate(&runs, &HashSet::new(), &HashMap::new()), Err(EvalError::EmptyDenominator)));
    }

    #[test]
    fn unknown_judgment_rejected() {
        let runs = vec![run("a", Some("abc"), None)];
        let j = HashMap::from([("zzz".to_owned(), true)]);
        assert!(matches!(evaluate(&runs, &HashSet::new(), &j), Err(EvalError::UnknownJudgment(_))));
    }

    #[test]
    fn lexicon_match_trims() {
        let runs = vec![run("a", Some(" abc "), None)];
        let lex: HashSet<String> = ["abc".to_owned()].into();
        assert_eq!(evaluate(&runs, &lex, &HashMap::new()).unwrap().lexicon_matches, 1);
    }

    #[test]
    fn strata_are_cumulative() {
        let runs = vec![run("a", Some("abc"), Some(150)), run("b", Some("bcd"), Some(5))];
        let lex: HashSet<String> = ["abc", "bcd"].map(String::from).into();
        let s = stratify(&runs, &[99, 29, 4], &lex, &HashMap::new()).unwrap();
        let counts: Vec<usize> = s.iter().map(|x| x.report.as_ref().map_or(0, |r| r.valid_roots)).collect();
        assert_eq!(counts, vec![1, 1, 2]);
        let whole = stratify(&runs, &[], &lex, &HashMap::new()).unwrap();
        assert_eq!(whole.len(), 1);
        assert_eq!(whole[0].report.as_ref().unwrap().valid_roots, 2);
        assert!(matches!(stratify(&runs, &[4, 29], &lex, &HashMap::new()), Err(EvalError::UnorderedStrata)));
    }

    #[test]
    fn parse_files() {
        let runs = read_runs("a\tabc\t12\nb\tINVALID_ROOT\n".as_bytes()).unwrap();
        assert_eq!(runs, vec![run("a", Some("abc"), Some(12)), run("b", None, None)]);
        let j = read_judgments("abc\t1\nxyz\t0\n".as_bytes()).unwrap();
        assert_eq!(j.get("abc"), Some(&true));
        assert!(read_judgments("abc\t2\n".as_bytes()).is_err());
    }
}
