//! Character n-grams and the sliding-window extractor.
//!
//! A character is one Unicode scalar value. Windows never span a post
//! boundary, and under the default [`Eligibility::Cjk`] policy any character
//! outside the CJK ideograph blocks breaks the window.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest n supported by the store.
pub const MAX_N: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GramError {
    #[error("gram must have 1 to 3 characters, got {0}")]
    BadLength(usize),
    #[error("n must be 1, 2 or 3, got {0}")]
    BadN(usize),
}

/// An n-character sequence, 1 <= n <= 3.
///
/// Ordering is by codepoint sequence, which for UTF-8 strings equals byte
/// order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Gram(String);

impl Gram {
    pub fn new(text: &str) -> Result<Self, GramError> {
        let n = text.chars().count();
        if !(1..=MAX_N).contains(&n) {
            return Err(GramError::BadLength(n));
        }
        Ok(Gram(text.to_owned()))
    }

    pub(crate) fn from_chars(chars: &[char]) -> Self {
        debug_assert!((1..=MAX_N).contains(&chars.len()));
        Gram(chars.iter().collect())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.0.chars()
    }

    /// Number of characters (not bytes).
    pub fn len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The first two characters, if the gram is a trigram.
    pub fn leading_bigram(&self) -> Option<[char; 2]> {
        let mut it = self.0.chars();
        let (a, b, _) = (it.next()?, it.next()?, it.next()?);
        it.next().is_none().then_some([a, b])
    }

    /// The last two characters, if the gram is a trigram.
    pub fn trailing_bigram(&self) -> Option<[char; 2]> {
        let mut it = self.0.chars();
        let (_, b, c) = (it.next()?, it.next()?, it.next()?);
        it.next().is_none().then_some([b, c])
    }

    pub fn last_char(&self) -> Option<char> {
        self.0.chars().next_back()
    }

    pub fn first_char(&self) -> Option<char> {
        self.0.chars().next()
    }
}

impl fmt::Debug for Gram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gram({})", self.0)
    }
}

impl fmt::Display for Gram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Gram {
    type Err = GramError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Gram::new(s)
    }
}

impl TryFrom<String> for Gram {
    type Error = GramError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        let n = s.chars().count();
        if !(1..=MAX_N).contains(&n) {
            return Err(GramError::BadLength(n));
        }
        Ok(Gram(s))
    }
}

impl From<Gram> for String {
    fn from(g: Gram) -> String {
        g.0
    }
}

/// Which characters may take part in a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eligibility {
    /// CJK Unified Ideographs plus Extension A; everything else breaks a window.
    #[default]
    Cjk,
    /// Every scalar value is eligible.
    All,
}

impl Eligibility {
    pub fn accepts(self, c: char) -> bool {
        match self {
            Eligibility::All => true,
            Eligibility::Cjk => is_cjk(c),
        }
    }
}

impl FromStr for Eligibility {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cjk" => Ok(Eligibility::Cjk),
            "all" => Ok(Eligibility::All),
            other => Err(format!("unknown eligibility `{other}` (expected cjk|all)")),
        }
    }
}

impl fmt::Display for Eligibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Eligibility::Cjk => "cjk",
            Eligibility::All => "all",
        })
    }
}

/// CJK Unified Ideographs (U+4E00..=U+9FFF) or Extension A (U+3400..=U+4DBF).
pub fn is_cjk(c: char) -> bool {
    matches!(c, '\u{4E00}'..='\u{9FFF}' | '\u{3400}'..='\u{4DBF}')
}

/// Maximal runs of eligible characters in `text`.
pub fn eligible_segments(text: &str, policy: Eligibility) -> Vec<Vec<char>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for c in text.chars() {
        if policy.accepts(c) {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Calls `f` once per window of `n` consecutive eligible characters.
pub fn for_each_gram(text: &str, n: usize, policy: Eligibility, mut f: impl FnMut(&[char])) {
    if n == 0 {
        return;
    }
    for seg in eligible_segments(text, policy) {
        for w in seg.windows(n) {
            f(w);
        }
    }
}

/// All n-grams of `text` in order of occurrence, repeats included.
pub fn extract_grams(text: &str, n: usize, policy: Eligibility) -> Result<Vec<Gram>, GramError> {
    if !(1..=MAX_N).contains(&n) {
        return Err(GramError::BadN(n));
    }
    let mut out = Vec::new();
    for_each_gram(text, n, policy, |w| out.push(Gram::from_chars(w)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(gs: &[Gram]) -> Vec<&str> {
        gs.iter().map(Gram::as_str).collect()
    }

    #[test]
    fn five_trigrams_of_prc() {
        let gs = extract_grams("中华人民共和国", 3, Eligibility::Cjk).unwrap();
        assert_eq!(strs(&gs), ["中华人", "华人民", "人民共", "民共和", "共和国"]);
    }

    #[test]
    fn too_short_for_window() {
        assert!(extract_grams("中华", 3, Eligibility::Cjk).unwrap().is_empty());
    }

    #[test]
    fn all_policy_slides_over_latin() {
        let gs = extract_grams("ABCD", 3, Eligibility::All).unwrap();
        assert_eq!(strs(&gs), ["ABC", "BCD"]);
        assert!(extract_grams("ABCD", 3, Eligibility::Cjk).unwrap().is_empty());
    }

    #[test]
    fn punctuation_breaks_window() {
        let gs = extract_grams("中华人，民共和国", 3, Eligibility::Cjk).unwrap();
        assert_eq!(strs(&gs), ["中华人", "民共和", "共和国"]);
    }

    #[test]
    fn bad_n_rejected() {
        assert_eq!(extract_grams("abc", 4, Eligibility::All), Err(GramError::BadN(4)));
        assert_eq!(extract_grams("abc", 0, Eligibility::All), Err(GramError::BadN(0)));
    }

    #[test]
    fn gram_bigrams() {
        let g = Gram::new("共和国").unwrap();
        assert_eq!(g.leading_bigram(), Some(['共', '和']));
        assert_eq!(g.trailing_bigram(), Some(['和', '国']));
        assert_eq!(Gram::new("共和").unwrap().leading_bigram(), None);
        assert!(Gram::new("").is_err());
        assert!(Gram::new("中华人民").is_err());
    }
}
