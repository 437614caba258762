use std::collections::HashMap;

use crate::gram::Gram;
use crate::store::GramStore;
use crate::time::DayWindow;

/// Trigrams keyed by their leading and trailing bigrams.
///
/// Built once per store; queries filter by activity inside a day window.
#[derive(Debug, Clone, Default)]
pub struct CandidateIndex {
    by_head: HashMap<[char; 2], Vec<Gram>>,
    by_tail: HashMap<[char; 2], Vec<Gram>>,
}

fn active(store: &GramStore, gram: &Gram, window: DayWindow) -> bool {
    store.daily_counts(gram).is_some_and(|days| days.range(window.start..=window.end()).any(|(_, &c)| c > 0))
}

impl CandidateIndex {
    /// Indexes every stored trigram regardless of when it occurs.
    pub fn build(store: &GramStore) -> Self {
        let mut idx = CandidateIndex::default();
        for g in store.grams() {
            if let (Some(h), Some(t)) = (g.leading_bigram(), g.trailing_bigram()) {
                idx.by_head.entry(h).or_default().push(g.clone());
                idx.by_tail.entry(t).or_default().push(g.clone());
            }
        }
        for v in idx.by_head.values_mut().chain(idx.by_tail.values_mut()) {
            v.sort();
        }
        idx
    }

    /// Index restricted to trigrams with a nonzero count inside `window`.
    pub fn build_for_window(store: &GramStore, window: DayWindow) -> Self {
        let mut idx = Self::build(store);
        for v in idx.by_head.values_mut().chain(idx.by_tail.values_mut()) {
            v.retain(|g| active(store, g, window));
        }
        idx.by_head.retain(|_, v| !v.is_empty());
        idx.by_tail.retain(|_, v| !v.is_empty());
        idx
    }

    /// Every indexed trigram starting with `bigram`, sorted.
    pub fn starting_with(&self, bigram: [char; 2]) -> &[Gram] {
        self.by_head.get(&bigram).map_or(&[], Vec::as_slice)
    }

    /// Every indexed trigram ending with `bigram`, sorted.
    pub fn ending_with(&self, bigram: [char; 2]) -> &[Gram] {
        self.by_tail.get(&bigram).map_or(&[], Vec::as_slice)
    }

    /// Rightward continuations active in `window`.
    pub fn continuations(&self, store: &GramStore, bigram: [char; 2], window: DayWindow) -> Vec<Gram> {
        self.starting_with(bigram).iter().filter(|g| active(store, g, window)).cloned().collect()
    }

    /// Leftward continuations active in `window`.
    pub fn predecessors(&self, store: &GramStore, bigram: [char; 2], window: DayWindow) -> Vec<Gram> {
        self.ending_with(bigram).iter().filter(|g| active(store, g, window)).cloned().collect()
    }
}

/// Index from leading bigram to the trigrams active in `window`.
pub fn build_candidate_index(store: &GramStore, window: DayWindow) -> CandidateIndex {
    CandidateIndex::build_for_window(store, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeBucket;

    fn g(s: &str) -> Gram {
        Gram::new(s).unwrap()
    }

    fn store(grams: &[&str]) -> GramStore {
        let mut s = GramStore::new();
        for x in grams {
            s.record(&g(x), TimeBucket::day(10), 1);
        }
        s
    }

    #[test]
    fn single_trigram() {
        let idx = build_candidate_index(&store(&["共和国"]), DayWindow::new(5, 10));
        assert_eq!(idx.starting_with(['共', '和']), &[g("共和国")]);
        assert!(idx.starting_with(['和', '国']).is_empty());
    }

    #[test]
    fn shared_head() {
        let idx = build_candidate_index(&store(&["人民共", "人民币", "民"]), DayWindow::new(5, 10));
        assert_eq!(idx.starting_with(['人', '民']), &[g("人民共"), g("人民币")]);
    }

    #[test]
    fn window_filters_inactive() {
        let s = store(&["共和国"]);
        assert!(build_candidate_index(&s, DayWindow::new(11, 3)).starting_with(['共', '和']).is_empty());
        let all = CandidateIndex::build(&s);
        assert!(all.continuations(&s, ['共', '和'], DayWindow::new(11, 3)).is_empty());
        assert_eq!(all.continuations(&s, ['共', '和'], DayWindow::new(10, 1)), vec![g("共和国")]);
    }
}
