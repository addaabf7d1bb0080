//! Corpus ingestion, filtering, keyword conditioning and record layouts.

mod filter;
mod ingest;
mod keyword;
mod normalize;
mod record;

use thiserror::Error;

pub use filter::{filter_titles, word_count};
pub use ingest::{ingest, IngestFormat, Ingested, SourceDocument};
pub use keyword::{extract_keyword, KeywordExtractor};
pub use normalize::{is_stopword, normalize_tokens, STOPWORDS};
pub use record::{
    format_analogy_record, format_domain_record, format_reddot_record, parse_corpus,
    write_corpus, RecordLayout, TaskKind, TrainingRecord,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("input is not valid UTF-8")]
    Undecodable,
    #[error("no valid records in input ({skipped} malformed)")]
    NoRecords { skipped: usize },
    #[error("take_latest requires timestamps; document {0:?} has none")]
    MissingTimestamp(String),
    #[error("field {0} is empty")]
    EmptyField(&'static str),
    #[error("field {field} is invalid: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("document has no in-vocabulary keyword candidates")]
    NoCandidates,
    #[error("cannot parse {kind:?} record: {reason}")]
    Parse { kind: TaskKind, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
