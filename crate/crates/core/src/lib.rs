//! Lexicon-free reconstruction of words and phrases from unsegmented text.
//!
//! Text is cut into overlapping character trigrams whose daily frequencies
//! are tracked over time. Trigrams belonging to the same word or meme rise
//! and fall together, so a phrase can be rebuilt by chaining overlapping
//! trigrams whose trend vectors are strongly correlated.
//!
//! Pipeline: [`ingest`] posts into a [`store::GramStore`], check a root with
//! [`root::is_valid_root`], pick a vector kind with [`selector`], then
//! [`connector::Connector::connect`]. [`trends`] finds roots automatically,
//! [`eval`] scores batches of results, and [`synth`] builds test corpora.

pub mod connector;
pub mod eval;
pub mod gram;
pub mod ingest;
pub mod root;
pub mod selector;
pub mod store;
pub mod synth;
pub mod time;
pub mod timeseries;
pub mod trends;

pub use connector::{connect, Connection, Connector, ConnectorConfig, KindChoice, PhraseCandidate};
pub use gram::{Eligibility, Gram};
pub use store::{FrequencySeries, GramStore};
pub use time::{DayWindow, TimeBucket};
pub use timeseries::{TrendVector, VectorKind};
