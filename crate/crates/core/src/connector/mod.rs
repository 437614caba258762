//! Phrase reconstruction from a root trigram.
//!
//! Starting from the root, the search repeatedly appends a trigram that
//! overlaps the phrase's last two characters. Candidates are scored by
//! `simScore`, the largest of their cosine similarities to the root, the
//! parent (last appended trigram) and the stem (member with the lowest
//! median daily count). Children are visited best-first, at most
//! `branch_width` of them, and only while `simScore >= sim_threshold`.
//! Every maximal phrase is scored by `simPath`, the product of each
//! member's cosine to the stem, and the phrases are ranked by it.

mod index;

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{build_candidate_index, CandidateIndex};

use crate::gram::Gram;
use crate::root::{self, RootConfig, RootVerdict};
use crate::selector::{self, SelectorModel};
use crate::store::GramStore;
use crate::time::DayWindow;
use crate::timeseries::{self, SeriesError, TrendVector, VectorKind, DEFAULT_EPSILON};

#[derive(Debug, Error)]
pub enum ConnectError {
    #[error("`{0}` is not a trigram")]
    NotTrigram(String),
    #[error("invalid root {gram}: {verdict}")]
    InvalidRoot { gram: Gram, verdict: RootVerdict },
    #[error("invalid connector config: {0}")]
    Config(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KindChoice {
    Fixed(VectorKind),
    /// Ask the vector selector, using the root's window series.
    Auto,
}

impl FromStr for KindChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            Ok(KindChoice::Auto)
        } else {
            s.parse().map(KindChoice::Fixed)
        }
    }
}

impl fmt::Display for KindChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KindChoice::Fixed(k) => write!(f, "{k}"),
            KindChoice::Auto => f.write_str("auto"),
        }
    }
}

/// Which non-top phrases are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlternateFloor {
    /// `sim_path >= sim_threshold ^ (number of trigrams)`.
    LengthFair,
    /// `sim_path >= sim_threshold`.
    Plain,
    /// Every maximal phrase.
    All,
    /// Only the best phrase.
    None,
}

impl FromStr for AlternateFloor {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "length-fair" => Ok(AlternateFloor::LengthFair),
            "plain" => Ok(AlternateFloor::Plain),
            "all" => Ok(AlternateFloor::All),
            "none" => Ok(AlternateFloor::None),
            other => Err(format!("unknown floor `{other}` (expected length-fair|plain|all|none)")),
        }
    }
}

impl fmt::Display for AlternateFloor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlternateFloor::LengthFair => "length-fair",
            AlternateFloor::Plain => "plain",
            AlternateFloor::All => "all",
            AlternateFloor::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectorConfig {
    pub sim_threshold: f64,
    pub branch_width: usize,
    /// `None` disables the wall-clock cutoff.
    pub time_budget: Option<Duration>,
    pub max_phrase_chars: usize,
    pub window: DayWindow,
    pub vector_kind: KindChoice,
    pub epsilon: f64,
    pub alternates: AlternateFloor,
    pub root: RootConfig,
    pub bidirectional: bool,
    /// Connect even when the root fails validation.
    pub force: bool,
}

impl ConnectorConfig {
    pub fn new(window: DayWindow) -> Self {
        ConnectorConfig {
            sim_threshold: 0.97,
            branch_width: 5,
            time_budget: Some(Duration::from_secs(60)),
            max_phrase_chars: 32,
            window,
            vector_kind: KindChoice::Auto,
            epsilon: DEFAULT_EPSILON,
            alternates: AlternateFloor::LengthFair,
            root: RootConfig::default(),
            bidirectional: false,
            force: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConnectError> {
        let bad = |m: &str| Err(ConnectError::Config(m.to_owned()));
        if !(self.sim_threshold > 0.0 && self.sim_threshold <= 1.0) {
            return bad("sim_threshold must be in (0, 1]");
        }
        if self.branch_width == 0 {
            return bad("branch_width must be at least 1");
        }
        if self.max_phrase_chars < 3 {
            return bad("max_phrase_chars must be at least 3");
        }
        if self.window.days == 0 {
            return bad("window must cover at least one day");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepScore {
    pub candidate: Gram,
    pub sim_root: f64,
    pub sim_parent: f64,
    pub sim_stem: f64,
    pub sim_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseCandidate {
    pub chars: String,
    /// Overlapping trigrams in reading order.
    pub trigrams: Vec<Gram>,
    /// Position of the root within `trigrams` (0 unless extended leftward).
    pub root_index: usize,
    pub stem: Gram,
    pub sim_path: f64,
    /// One entry per accepted extension, in the order they were made.
    pub per_step_scores: Vec<StepScore>,
}

impl PhraseCandidate {
    pub fn char_len(&self) -> usize {
        self.chars.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub root: Gram,
    pub kind: VectorKind,
    pub verdict: RootVerdict,
    /// Best first.
    pub candidates: Vec<PhraseCandidate>,
    pub timed_out: bool,
}

impl Connection {
    pub fn best(&self) -> &PhraseCandidate {
        &self.candidates[0]
    }
}

/// Median of the values; the mean of the middle two for even lengths.
pub fn median(values: &[u64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] as f64 + v[m] as f64) / 2.0
    }
}

/// Index of the smallest median; the earliest wins ties.
fn argmin_median(medians: &[f64]) -> usize {
    let mut best = 0;
    for (i, &m) in medians.iter().enumerate().skip(1) {
        if m < medians[best] {
            best = i;
        }
    }
    best
}

/// The trigram whose daily count median over `window` is smallest.
pub fn stem_of<'a>(trigrams: &'a [Gram], store: &GramStore, window: DayWindow) -> Option<&'a Gram> {
    if trigrams.is_empty() {
        return None;
    }
    let medians: Vec<f64> =
        trigrams.iter().map(|g| median(&store.daily_series(g, window.start, window.days).values)).collect();
    Some(&trigrams[argmin_median(&medians)])
}

/// Lazily computed trend vectors and FT medians for one window and kind.
pub struct VectorCache<'s> {
    store: &'s GramStore,
    window: DayWindow,
    kind: VectorKind,
    epsilon: f64,
    vectors: HashMap<Gram, Rc<TrendVector>>,
    medians: HashMap<Gram, f64>,
}

impl<'s> VectorCache<'s> {
    pub fn new(store: &'s GramStore, window: DayWindow, kind: VectorKind, epsilon: f64) -> Self {
        VectorCache { store, window, kind, epsilon, vectors: HashMap::new(), medians: HashMap::new() }
    }

    pub fn kind(&self) -> VectorKind {
        self.kind
    }

    pub fn vector(&mut self, gram: &Gram) -> Result<Rc<TrendVector>, SeriesError> {
        if let Some(v) = self.vectors.get(gram) {
            return Ok(Rc::clone(v));
        }
        let series = self.store.daily_series(gram, self.window.start, self.window.days);
        let v = Rc::new(timeseries::trend_vector(&series, self.kind, self.epsilon)?);
        self.vectors.insert(gram.clone(), Rc::clone(&v));
        Ok(v)
    }

    pub fn median(&mut self, gram: &Gram) -> f64 {
        if let Some(&m) = self.medians.get(gram) {
            return m;
        }
        let m = median(&self.store.daily_series(gram, self.window.start, self.window.days).values);
        self.medians.insert(gram.clone(), m);
        m
    }

    /// Cosine between two grams' vectors, undefined mapped to 0.
    pub fn similarity(&mut self, a: &Gram, b: &Gram) -> Result<f64, SeriesError> {
        let (va, vb) = (self.vector(a)?, self.vector(b)?);
        Ok(timeseries::cosine(&va, &vb)?.value_or_zero())
    }
}

/// The three cosines of `candidate` against root, parent and stem, and
/// their maximum.
pub fn sim_score(
    candidate: &Gram,
    root: &Gram,
    parent: &Gram,
    stem: &Gram,
    vectors: &mut VectorCache<'_>,
) -> Result<StepScore, SeriesError> {
    let sim_root = vectors.similarity(candidate, root)?;
    let sim_parent = vectors.similarity(candidate, parent)?;
    let sim_stem = vectors.similarity(candidate, stem)?;
    Ok(StepScore {
        candidate: candidate.clone(),
        sim_root,
        sim_parent,
        sim_stem,
        sim_score: sim_root.max(sim_parent).max(sim_stem),
    })
}

/// Product over the phrase's trigrams of their cosine to the stem.
///
/// The stem's own factor is exactly 1; undefined or negative cosines
/// contribute 0.
pub fn sim_path(trigrams: &[Gram], stem: &Gram, vectors: &mut VectorCache<'_>) -> Result<f64, SeriesError> {
    let mut product = 1.0;
    for t in trigrams {
        if t == stem {
            continue;
        }
        product *= vectors.similarity(stem, t)?.max(0.0);
    }
    Ok(product)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Right,
    Left,
}

#[derive(Clone)]
struct Node {
    chars: Vec<char>,
    trigrams: Vec<Gram>,
    root_index: usize,
    parent: usize,
    stem: usize,
    steps: Vec<StepScore>,
}

struct Search<'a, 's> {
    store: &'s GramStore,
    index: &'a CandidateIndex,
    config: &'a ConnectorConfig,
    vectors: VectorCache<'s>,
    deadline: Option<Instant>,
    timed_out: bool,
    leaves: Vec<Node>,
}

impl Search<'_, '_> {
    fn out_of_time(&mut self) -> bool {
        if !self.timed_out && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.timed_out = true;
        }
        self.timed_out
    }

    fn candidates(&self, node: &Node, dir: Direction) -> Vec<Gram> {
        let w = self.config.window;
        let found = match dir {
            Direction::Right => {
                let n = node.chars.len();
                self.index.continuations(self.store, [node.chars[n - 2], node.chars[n - 1]], w)
            }
            Direction::Left => self.index.predecessors(self.store, [node.chars[0], node.chars[1]], w),
        };
        // A trigram already in the phrase would only repeat a cycle.
        found.into_iter().filter(|g| !node.trigrams.contains(g)).collect()
    }

    fn extend(&mut self, node: &Node, step: StepScore, dir: Direction) -> Node {
        let mut child = node.clone();
        let g = step.candidate.clone();
        match dir {
            Direction::Right => {
                child.chars.push(g.last_char().expect("trigram"));
                child.trigrams.push(g);
                child.parent = child.trigrams.len() - 1;
            }
            Direction::Left => {
                child.chars.insert(0, g.first_char().expect("trigram"));
                child.trigrams.insert(0, g);
                child.root_index += 1;
                child.parent = 0;
            }
        }
        let medians: Vec<f64> = child.trigrams.iter().map(|t| self.vectors.median(t)).collect();
        child.stem = argmin_median(&medians);
        child.steps.push(step);
        child
    }

    fn finish(&mut self, node: Node, dir: Direction) -> Result<(), SeriesError> {
        if dir == Direction::Right && self.config.bidirectional {
            self.expand(node, Direction::Left)
        } else {
            self.leaves.push(node);
            Ok(())
        }
    }

    fn expand(&mut self, node: Node, dir: Direction) -> Result<(), SeriesError> {
        if self.timed_out {
            return Ok(());
        }
        if self.out_of_time() {
            self.leaves.push(node);
            return Ok(());
        }
        if node.chars.len() >= self.config.max_phrase_chars {
            return self.finish(node, dir);
        }
        let root = node.trigrams[node.root_index].clone();
        let parent = node.trigrams[node.parent].clone();
        let stem = node.trigrams[node.stem].clone();
        let mut scored = Vec::new();
        for c in self.candidates(&node, dir) {
            scored.push(sim_score(&c, &root, &parent, &stem, &mut self.vectors)?);
        }
        scored.sort_by(|a, b| b.sim_score.total_cmp(&a.sim_score).then_with(|| a.candidate.cmp(&b.candidate)));
        scored.truncate(self.config.branch_width);
        scored.retain(|s| s.sim_score >= self.config.sim_threshold);
        if scored.is_empty() {
            return self.finish(node, dir);
        }
        for step in scored {
            let child = self.extend(&node, step, dir);
            self.expand(child, dir)?;
            if self.timed_out {
                break;
            }
        }
        Ok(())
    }
}

/// A store plus a bigram index, ready to run many searches.
pub struct Connector<'s> {
    store: &'s GramStore,
    index: CandidateIndex,
    model: Option<SelectorModel>,
}

impl<'s> Connector<'s> {
    pub fn new(store: &'s GramStore, model: Option<SelectorModel>) -> Self {
        Connector { store, index: CandidateIndex::build(store), model }
    }

    pub fn store(&self) -> &'s GramStore {
        self.store
    }

    pub fn model(&self) -> Option<&SelectorModel> {
        self.model.as_ref()
    }

    /// Vector kind for `root` over the config window.
    pub fn resolve_kind(&self, root: &Gram, config: &ConnectorConfig) -> VectorKind {
        match config.vector_kind {
            KindChoice::Fixed(k) => k,
            KindChoice::Auto => {
                let series = self.store.daily_series(root, config.window.start, config.window.days);
                match selector::features(&series, config.epsilon) {
                    Ok(f) => selector::select(&f, self.model.as_ref()),
                    Err(_) => VectorKind::Ft,
                }
            }
        }
    }

    pub fn connect(&self, root: &Gram, config: &ConnectorConfig) -> Result<Connection, ConnectError> {
        config.validate()?;
        if root.len() != 3 {
            return Err(ConnectError::NotTrigram(root.to_string()));
        }
        let w = config.window;
        let series = self.store.daily_series(root, w.start, w.days);
        let verdict = root::is_valid_root(&series, &config.root);
        if !verdict.valid && !config.force {
            return Err(ConnectError::InvalidRoot { gram: root.clone(), verdict });
        }
        let kind = self.resolve_kind(root, config);
        let mut search = Search {
            store: self.store,
            index: &self.index,
            config,
            vectors: VectorCache::new(self.store, w, kind, config.epsilon),
            deadline: config.time_budget.map(|b| Instant::now() + b),
            timed_out: false,
            leaves: Vec::new(),
        };
        // Fail early on vectors that cannot be built (e.g. a 1-day DFT window).
        search.vectors.vector(root)?;
        let start = Node {
            chars: root.chars().collect(),
            trigrams: vec![root.clone()],
            root_index: 0,
            parent: 0,
            stem: 0,
            steps: Vec::new(),
        };
        search.expand(start, Direction::Right)?;

        let mut candidates = Vec::with_capacity(search.leaves.len());
        for leaf in std::mem::take(&mut search.leaves) {
            let stem = leaf.trigrams[leaf.stem].clone();
            let score = sim_path(&leaf.trigrams, &stem, &mut search.vectors)?;
            candidates.push(PhraseCandidate {
                chars: leaf.chars.iter().collect(),
                trigrams: leaf.trigrams,
                root_index: leaf.root_index,
                stem,
                sim_path: score,
                per_step_scores: leaf.steps,
            });
        }
        candidates.sort_by(|a, b| b.sim_path.total_cmp(&a.sim_path).then_with(|| a.chars.cmp(&b.chars)));
        let floor = |c: &PhraseCandidate| match config.alternates {
            AlternateFloor::LengthFair => c.sim_path >= config.sim_threshold.powi(c.trigrams.len() as i32),
            AlternateFloor::Plain => c.sim_path >= config.sim_threshold,
            AlternateFloor::All => true,
            AlternateFloor::None => false,
        };
        let mut kept = Vec::with_capacity(candidates.len());
        for (i, c) in candidates.into_iter().enumerate() {
            if i == 0 || floor(&c) {
                kept.push(c);
            }
        }
        Ok(Connection { root: root.clone(), kind, verdict, candidates: kept, timed_out: search.timed_out })
    }

    /// Connects every root, in parallel on `threads` workers; results keep
    /// the input order.
    pub fn connect_many(
        &self,
        roots: &[(Gram, ConnectorConfig)],
        threads: usize,
    ) -> Vec<Result<Connection, ConnectError>> {
        use rayon::prelude::*;
        let run = || roots.par_iter().map(|(r, c)| self.connect(r, c)).collect();
        match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(_) => roots.iter().map(|(r, c)| self.connect(r, c)).collect(),
        }
    }
}

/// One-shot search; builds a fresh index.
pub fn connect(
    root: &Gram,
    config: &ConnectorConfig,
    store: &GramStore,
    model: Option<&SelectorModel>,
) -> Result<Connection, ConnectError> {
    Connector::new(store, model.cloned()).connect(root, config)
}
