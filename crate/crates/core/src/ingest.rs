//! Post parsing and n-gram counting.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gram::{self, Eligibility, Gram};
use crate::store::GramStore;
use crate::time::TimeBucket;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed record on line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("n-gram sizes must be within 1..=3, got {0}")]
    BadNgram(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub timestamp: i64,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Jsonl,
    Tsv,
}

impl FromStr for InputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(format!("unknown format `{other}` (expected jsonl|tsv)")),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Jsonl => "jsonl",
            InputFormat::Tsv => "tsv",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedPosts {
    pub posts: Vec<Post>,
    /// Lines skipped as malformed (lenient mode only).
    pub rejected: usize,
}

/// Reads one post per line. Blank lines are ignored.
///
/// In lenient mode malformed lines are counted and skipped; in strict mode
/// the first one aborts with its 1-based line number.
pub fn parse_posts<R: BufRead>(mut input: R, format: InputFormat, strict: bool) -> Result<ParsedPosts, IngestError> {
    let mut out = ParsedPosts::default();
    let mut buf = Vec::new();
    let mut line = 0usize;
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let parsed = std::str::from_utf8(&buf).map_err(|_| "invalid UTF-8".to_owned()).and_then(|s| match format {
            InputFormat::Jsonl => parse_json_line(s),
            InputFormat::Tsv => parse_tsv_line(s),
        });
        match parsed {
            Ok(p) => out.posts.push(p),
            Err(reason) if strict => return Err(IngestError::Malformed { line, reason }),
            Err(_) => out.rejected += 1,
        }
    }
    Ok(out)
}

fn parse_json_line(s: &str) -> Result<Post, String> {
    let v: serde_json::Value = serde_json::from_str(s).map_err(|e| e.to_string())?;
    let obj = v.as_object().ok_or("record is not an object")?;
    let id = match obj.get("id") {
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(serde_json::Value::Number(n)) => n.to_string(),
        _ => return Err("missing or non-string `id`".into()),
    };
    let timestamp = match obj.get("ts") {
        Some(serde_json::Value::Number(n)) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i,
            (None, Some(f)) if f.is_finite() && f.abs() < 1e15 => f.floor() as i64,
            _ => return Err("`ts` out of range".into()),
        },
        _ => return Err("missing or non-numeric `ts`".into()),
    };
    let text = match obj.get("text") {
        Some(serde_json::Value::String(s)) => s.clone(),
        _ => return Err("missing or non-string `text`".into()),
    };
    Ok(Post { id, timestamp, text })
}

fn parse_tsv_line(s: &str) -> Result<Post, String> {
    let fields: Vec<&str> = s.split('\t').collect();
    let [id, ts, text] = fields[..] else {
        return Err(format!("expected 3 tab-separated fields, got {}", fields.len()));
    };
    let timestamp = ts.trim().parse::<i64>().map_err(|_| format!("bad timestamp `{ts}`"))?;
    Ok(Post { id: id.to_owned(), timestamp, text: text.to_owned() })
}

/// Count of one gram within one hour bucket.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GramEvent {
    pub gram: Gram,
    pub bucket: TimeBucket,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestConfig {
    pub ngrams: Vec<usize>,
    pub eligibility: Eligibility,
    pub tz_offset_minutes: i64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { ngrams: vec![3], eligibility: Eligibility::Cjk, tz_offset_minutes: 0 }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        match self.ngrams.iter().find(|n| !(1..=gram::MAX_N).contains(n)) {
            Some(&n) => Err(IngestError::BadNgram(n)),
            None => Ok(()),
        }
    }
}

/// Gram events of a single post, aggregated and sorted.
pub fn post_events(post: &Post, config: &IngestConfig) -> Vec<GramEvent> {
    let bucket = TimeBucket::of_timestamp(post.timestamp, config.tz_offset_minutes);
    let mut counts: HashMap<Gram, u64> = HashMap::new();
    for &n in &config.ngrams {
        gram::for_each_gram(&post.text, n, config.eligibility, |w| {
            *counts.entry(Gram::from_chars(w)).or_insert(0) += 1;
        });
    }
    let mut events: Vec<GramEvent> =
        counts.into_iter().map(|(gram, count)| GramEvent { gram, bucket, count }).collect();
    events.sort();
    events
}

fn count_into(store: &mut GramStore, posts: &[Post], config: &IngestConfig) {
    for post in posts {
        let bucket = TimeBucket::of_timestamp(post.timestamp, config.tz_offset_minutes);
        for &n in &config.ngrams {
            gram::for_each_gram(&post.text, n, config.eligibility, |w| {
                store.record(&Gram::from_chars(w), bucket, 1);
            });
        }
    }
}

/// Counts every gram occurrence of `posts` into a fresh store.
pub fn ingest(posts: &[Post], config: &IngestConfig) -> Result<GramStore, IngestError> {
    config.validate()?;
    let mut store = GramStore::new();
    count_into(&mut store, posts, config);
    Ok(store)
}

/// Sharded [`ingest`]: posts are split into `threads` contiguous shards,
/// counted independently and merged by summation.
pub fn ingest_parallel(posts: &[Post], config: &IngestConfig, threads: usize) -> Result<GramStore, IngestError> {
    config.validate()?;
    let threads = threads.max(1);
    if threads == 1 || posts.len() < 2 {
        return ingest(posts, config);
    }
    let shard = posts.len().div_ceil(threads);
    let partials: Vec<GramStore> = std::thread::scope(|s| {
        let handles: Vec<_> = posts
            .chunks(shard)
            .map(|chunk| {
                s.spawn(move || {
                    let mut st = GramStore::new();
                    count_into(&mut st, chunk, config);
                    st
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("shard worker panicked")).collect()
    });
    let mut iter = partials.into_iter();
    let mut total = iter.next().unwrap_or_default();
    for part in iter {
        total.merge(part);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(ts: i64, text: &str) -> Post {
        Post { id: "p".into(), timestamp: ts, text: text.into() }
    }

    fn g(s: &str) -> Gram {
        Gram::new(s).unwrap()
    }

    #[test]
    fn one_json_line() {
        let data = r#"{"id":"1","ts":1311379200,"text":"中华人民共和国"}"#;
        let p = parse_posts(data.as_bytes(), InputFormat::Jsonl, true).unwrap();
        assert_eq!(p.posts, vec![Post { id: "1".into(), timestamp: 1311379200, text: "中华人民共和国".into() }]);
        assert_eq!(p.rejected, 0);
    }

    #[test]
    fn empty_input() {
        let p = parse_posts(&b""[..], InputFormat::Jsonl, true).unwrap();
        assert!(p.posts.is_empty());
    }

    #[test]
    fn lenient_counts_rejects() {
        let data = concat!(
            "{\"id\":\"1\",\"ts\":1,\"text\":\"a\"}\n",
            "{\"id\":\"2\",\"ts\":2,\"text\":\"b\"}\n",
            "{not json}\n",
            "{\"id\":\"3\",\"ts\":3,\"text\":\"c\"}\n",
        );
        let p = parse_posts(data.as_bytes(), InputFormat::Jsonl, false).unwrap();
        assert_eq!(p.posts.len(), 3);
        assert_eq!(p.rejected, 1);
        let ids: Vec<_> = p.posts.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "3"]);
        match parse_posts(data.as_bytes(), InputFormat::Jsonl, true) {
            Err(IngestError::Malformed { line: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tsv_rejects_embedded_tab() {
        let data = "1\t100\t中华人\n2\t200\t中\t华\n";
        let p = parse_posts(data.as_bytes(), InputFormat::Tsv, false).unwrap();
        assert_eq!(p.posts.len(), 1);
        assert_eq!(p.rejected, 1);
    }

    #[test]
    fn same_hour_posts_add() {
        let posts = vec![post(7200, "ABC"), post(7300, "ABC")];
        let cfg = IngestConfig { eligibility: Eligibility::All, ..Default::default() };
        let s = ingest(&posts, &cfg).unwrap();
        assert_eq!(s.count(&g("ABC"), TimeBucket::hour(2)), 2);
    }

    #[test]
    fn within_post_repeats_count() {
        let cfg = IngestConfig { ngrams: vec![2], eligibility: Eligibility::All, tz_offset_minutes: 0 };
        let s = ingest(&[post(0, "ABAB")], &cfg).unwrap();
        assert_eq!(s.count(&g("AB"), TimeBucket::hour(0)), 2);
        assert_eq!(s.count(&g("BA"), TimeBucket::hour(0)), 1);
        assert_eq!(s.num_grams(), 2);
    }

    #[test]
    fn distinct_hours_distinct_buckets() {
        let cfg = IngestConfig { eligibility: Eligibility::All, ..Default::default() };
        let s = ingest(&[post(0, "ABC"), post(3600, "ABC")], &cfg).unwrap();
        assert_eq!(s.count(&g("ABC"), TimeBucket::hour(0)), 1);
        assert_eq!(s.count(&g("ABC"), TimeBucket::hour(1)), 1);
    }

    #[test]
    fn post_events_aggregate() {
        let cfg = IngestConfig { ngrams: vec![2], eligibility: Eligibility::All, tz_offset_minutes: 0 };
        let ev = post_events(&post(0, "ABAB"), &cfg);
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].gram.as_str(), ev[0].count), ("AB", 2));
    }

    #[test]
    fn rejects_bad_n() {
        let cfg = IngestConfig { ngrams: vec![4], ..Default::default() };
        assert!(matches!(ingest(&[], &cfg), Err(IngestError::BadNgram(4))));
    }
}
