//! Deterministic synthetic corpora with injected phrase bursts.
//!
//! Background words are drawn from CJK Extension A with Zipf-distributed
//! frequencies. Injected phrases must use CJK Unified Ideographs, so the two
//! alphabets never share a trigram. Each injected occurrence is its own post,
//! fenced by full-width commas so no window crosses into the filler.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Post;
use crate::time::SECS_PER_HOUR;

const SECS_PER_DAY: i64 = 24 * SECS_PER_HOUR;
const FENCE: char = '，';
const BACKGROUND_LO: u32 = 0x3400;
const BACKGROUND_HI: u32 = 0x4DBF;
const PHRASE_LO: u32 = 0x4E00;
const PHRASE_HI: u32 = 0x9FFF;

pub const MIN_PHRASE_CHARS: usize = 3;
pub const MAX_PHRASE_CHARS: usize = 16;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("phrase `{phrase}`: {reason}")]
    BadPhrase { phrase: String, reason: String },
    #[error("phrase `{phrase}` has {got} profile days, corpus has {want}")]
    ProfileLength { phrase: String, got: usize, want: usize },
    #[error("phrases `{a}` and `{b}` share trigram `{trigram}`")]
    SharedTrigram { a: String, b: String, trigram: String },
    #[error("bad background model: {0}")]
    Background(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub phrase: String,
    /// Occurrences per day.
    pub profile: Vec<u64>,
    /// Defaults to the profile's first maximum.
    #[serde(default)]
    pub spike_day: Option<usize>,
    /// Allow trigrams shared with other phrases.
    #[serde(default)]
    pub allow_shared: bool,
}

impl InjectionSpec {
    pub fn new(phrase: &str, profile: Vec<u64>) -> Self {
        InjectionSpec { phrase: phrase.to_owned(), profile, spike_day: None, allow_shared: false }
    }

    pub fn resolved_spike_day(&self) -> usize {
        self.spike_day.unwrap_or_else(|| {
            let max = self.profile.iter().copied().max().unwrap_or(0);
            self.profile.iter().position(|&c| c == max).unwrap_or(0)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    /// Distinct background words in the vocabulary.
    pub num_grams: usize,
    /// Background words emitted per day.
    pub words_per_day: usize,
    pub zipf_exponent: f64,
    pub min_word_chars: usize,
    pub max_word_chars: usize,
    pub min_words_per_post: usize,
    pub max_words_per_post: usize,
}

impl Default for Background {
    fn default() -> Self {
        Background {
            num_grams: 10_000,
            words_per_day: 4_000,
            zipf_exponent: 1.1,
            min_word_chars: 2,
            max_word_chars: 4,
            min_words_per_post: 2,
            max_words_per_post: 8,
        }
    }
}

impl Background {
    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Background(m.to_owned()));
        if self.num_grams == 0 && self.words_per_day > 0 {
            return bad("num_grams must be positive when words_per_day is");
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return bad("zipf_exponent must be finite and non-negative");
        }
        if self.min_word_chars == 0 || self.min_word_chars > self.max_word_chars {
            return bad("word length range is empty");
        }
        if self.min_words_per_post == 0 || self.min_words_per_post > self.max_words_per_post {
            return bad("words-per-post range is empty");
        }
        Ok(())
    }
}

/// Everything needed to regenerate a corpus byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub start_day: i64,
    pub days: usize,
    pub specs: Vec<InjectionSpec>,
    pub background: Background,
}

fn is_phrase_char(c: char) -> bool {
    (PHRASE_LO..=PHRASE_HI).contains(&(c as u32))
}

fn trigrams(phrase: &str) -> Vec<String> {
    let cs: Vec<char> = phrase.chars().collect();
    cs.windows(3).map(|w| w.iter().collect()).collect()
}

fn validate_specs(specs: &[InjectionSpec], days: usize) -> Result<(), SynthError> {
    let mut owner: HashMap<String, (usize, bool)> = HashMap::new();
    for (i, s) in specs.iter().enumerate() {
        let bad = |reason: &str| SynthError::BadPhrase { phrase: s.phrase.clone(), reason: reason.to_owned() };
        let n = s.phrase.chars().count();
        if !(MIN_PHRASE_CHARS..=MAX_PHRASE_CHARS).contains(&n) {
            return Err(bad("length must be between 3 and 16 characters"));
        }
        if !s.phrase.chars().all(is_phrase_char) {
            return Err(bad("characters must lie in U+4E00..=U+9FFF"));
        }
        if s.profile.len() != days {
            return Err(SynthError::ProfileLength { phrase: s.phrase.clone(), got: s.profile.len(), want: days });
        }
        if s.spike_day.is_some_and(|d| d >= days) {
            return Err(bad("spike_day outside the corpus"));
        }
        let own = trigrams(&s.phrase);
        if own.iter().collect::<HashSet<_>>().len() != own.len() {
            return Err(bad("phrase repeats a trigram"));
        }
        for t in own {
            if let Some(&(j, shared)) = owner.get(&t) {
                if !(shared && s.allow_shared) {
                    return Err(SynthError::SharedTrigram {
                        a: specs[j].phrase.clone(),
                        b: s.phrase.clone(),
                        trigram: t,
                    });
                }
            } else {
                owner.insert(t, (i, s.allow_shared));
            }
        }
    }
    Ok(())
}

fn random_word(rng: &mut ChaCha8Rng, lo: u32, hi: u32, len: usize) -> String {
    (0..len).map(|_| char::from_u32(rng.random_range(lo..=hi)).expect("CJK scalar")).collect()
}

/// Generates the corpus described by `manifest`.
pub fn generate_from_manifest(manifest: &Manifest) -> Result<Vec<Post>, SynthError> {
    validate_specs(&manifest.specs, manifest.days)?;
    let bg = &manifest.background;
    bg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed);

    let vocab: Vec<String> = (0..bg.num_grams)
        .map(|_| {
            let len = rng.random_range(bg.min_word_chars..=bg.max_word_chars);
            random_word(&mut rng, BACKGROUND_LO, BACKGROUND_HI, len)
        })
        .collect();
    let zipf = if vocab.is_empty() {
        None
    } else {
        let weights = (1..=vocab.len()).map(|k| (k as f64).powf(-bg.zipf_exponent));
        Some(WeightedIndex::new(weights).map_err(|e| SynthError::Background(e.to_string()))?)
    };
    let filler = |rng: &mut ChaCha8Rng, words: usize| -> String {
        match &zipf {
            Some(z) => (0..words).map(|_| vocab[z.sample(rng)].as_str()).collect(),
            None => String::new(),
        }
    };

    let mut posts = Vec::new();
    for d in 0..manifest.days {
        let mut texts: Vec<String> = Vec::new();
        for spec in &manifest.specs {
            for _ in 0..spec.profile[d] {
                let (a, b) = (rng.random_range(1..=3), rng.random_range(1..=3));
                let left = filler(&mut rng, a);
                let right = filler(&mut rng, b);
                texts.push(format!("{left}{FENCE}{}{FENCE}{right}", spec.phrase));
            }
        }
        let mut emitted = 0;
        while emitted < bg.words_per_day {
            let k = rng.random_range(bg.min_words_per_post..=bg.max_words_per_post).min(bg.words_per_day - emitted);
            texts.push(filler(&mut rng, k));
            emitted += k;
        }
        texts.shuffle(&mut rng);
        let day_start = (manifest.start_day + d as i64) * SECS_PER_DAY;
        let mut stamped: Vec<(i64, String)> =
            texts.into_iter().map(|t| (day_start + rng.random_range(0..SECS_PER_DAY), t)).collect();
        stamped.sort_by_key(|(ts, _)| *ts);
        for (ts, text) in stamped {
            posts.push(Post { id: format!("s{}", posts.len()), timestamp: ts, text });
        }
    }
    Ok(posts)
}

/// Generates a corpus and the manifest that reproduces it.
pub fn generate(
    specs: Vec<InjectionSpec>,
    background: Background,
    seed: u64,
    start_day: i64,
    days: usize,
) -> Result<(Vec<Post>, Manifest), SynthError> {
    let manifest = Manifest { seed, start_day, days, specs, background };
    let posts = generate_from_manifest(&manifest)?;
    Ok((posts, manifest))
}

/// Parameters for [`random_specs`].
#[derive(Debug, Clone, PartialEq)]
pub struct BurstPlan {
    pub count: usize,
    pub min_chars: usize,
    pub max_chars: usize,
    pub days: usize,
    /// Per-day occurrences outside the spike are drawn from this range.
    pub base: (u64, u64),
    pub spike: u64,
}

impl Default for BurstPlan {
    fn default() -> Self {
        BurstPlan { count: 50, min_chars: 4, max_chars: 7, days: 15, base: (1, 3), spike: 200 }
    }
}

/// Random phrases with single-day bursts. Phrases never share a trigram.
pub fn random_specs(plan: &BurstPlan, seed: u64) -> Vec<InjectionSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(plan.count);
    while out.len() < plan.count {
        let len = rng.random_range(plan.min_chars..=plan.max_chars);
        let phrase = random_word(&mut rng, PHRASE_LO, PHRASE_HI, len);
        let tris = trigrams(&phrase);
        let unique: HashSet<&String> = tris.iter().collect();
        if unique.len() != tris.len() || tris.iter().any(|t| taken.contains(t)) {
            continue;
        }
        taken.extend(tris);
        let spike = rng.random_range(0..plan.days);
        let profile = (0..plan.days)
            .map(|d| if d == spike { plan.spike } else { rng.random_range(plan.base.0..=plan.base.1) })
            .collect();
        out.push(InjectionSpec { phrase, profile, spike_day: Some(spike), allow_shared: false });
    }
    out
}

#[derive(Serialize)]
struct Record<'a> {
    id: &'a str,
    ts: i64,
    text: &'a str,
}

/// Writes posts in the line-delimited JSON ingest format.
pub fn write_posts<W: Write>(posts: &[Post], mut out: W) -> io::Result<()> {
    for p in posts {
        serde_json::to_writer(&mut out, &Record { id: &p.id, ts: p.timestamp, text: &p.text })?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads one JSON [`InjectionSpec`] per line.
pub fn read_specs<R: BufRead>(input: R) -> Result<Vec<InjectionSpec>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| SynthError::Parse { line: i + 1, reason: e.to_string() })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_bg() -> Background {
        Background { num_grams: 200, words_per_day: 300, ..Default::default() }
    }

    #[test]
    fn same_seed_same_bytes() {
        let specs = vec![InjectionSpec::new("谷歌开发者大会", vec![1, 5, 2])];
        let run = || {
            let (posts, _) = generate(specs.clone(), small_bg(), 42, 15_000, 3).unwrap();
            let mut buf = Vec::new();
            write_posts(&posts, &mut buf).unwrap();
            buf
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn manifest_regenerates() {
        let specs = random_specs(&BurstPlan { count: 3, days: 4, ..Default::default() }, 7);
        let (posts, manifest) = generate(specs, small_bg(), 9, 15_000, 4).unwrap();
        let json = serde_json::to_string(&manifest).unwrap();
        let back: Manifest = serde_json::from_str(&json).unwrap();
        assert_eq!(generate_from_manifest(&back).unwrap(), posts);
    }

    #[test]
    fn rejects_conflicts() {
        let bad_len = vec![InjectionSpec::new("谷歌", vec![1])];
        assert!(matches!(generate(bad_len, small_bg(), 1, 0, 1), Err(SynthError::BadPhrase { .. })));
        let bad_alpha = vec![InjectionSpec::new("\u{3400}谷歌", vec![1])];
        assert!(matches!(generate(bad_alpha, small_bg(), 1, 0, 1), Err(SynthError::BadPhrase { .. })));
        let shared = vec![InjectionSpec::new("乔布斯传", vec![1]), InjectionSpec::new("乔布斯情书", vec![1])];
        assert!(matches!(generate(shared, small_bg(), 1, 0, 1), Err(SynthError::SharedTrigram { .. })));
        let wrong_days = vec![InjectionSpec::new("乔布斯传", vec![1, 2])];
        assert!(matches!(generate(wrong_days, small_bg(), 1, 0, 1), Err(SynthError::ProfileLength { .. })));
    }

    #[test]
    fn explicit_sharing_allowed() {
        let mut a = InjectionSpec::new("乔布斯传", vec![1]);
        let mut b = InjectionSpec::new("乔布斯情书", vec![1]);
        a.allow_shared = true;
        b.allow_shared = true;
        assert!(generate(vec![a, b], small_bg(), 1, 0, 1).is_ok());
    }

    #[test]
    fn random_specs_are_disjoint() {
        let specs = random_specs(&BurstPlan::default(), 3);
        assert_eq!(specs.len(), 50);
        let mut seen = HashSet::new();
        for s in &specs {
            assert!((4..=7).contains(&s.phrase.chars().count()));
            assert_eq!(s.profile[s.resolved_spike_day()], 200);
            for t in trigrams(&s.phrase) {
                assert!(seen.insert(t));
            }
        }
    }
}
