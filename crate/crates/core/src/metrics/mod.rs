//! Diversity and novelty metrics over an [`EmbeddingStore`].
//!
//! [`wmd`] is the exact Word Mover's Distance between two normalized
//! bags-of-words (Euclidean ground cost on raw vectors); higher values mean the
//! generated text sits further from the reference. [`min_pairwise_relevancy`]
//! is the lowest cosine over all term pairs of one concept; lower values mean
//! the concept combines more distant knowledge.
//!
//! [`EmbeddingStore`]: crate::embedding::EmbeddingStore

mod bow;
mod relevancy;
mod stats;
pub mod transport;
mod wmd;

use thiserror::Error;

use crate::embedding::EmbeddingError;

pub use bow::{nbow, BagOfWords};
pub use relevancy::{min_pairwise_relevancy, RelevancyScore};
pub use stats::{distribution_summary, token_length, DistributionSummary};
pub use wmd::{wmd, wmd_lower_bounds, LowerBounds, WmdScore};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("bag of words is empty (every token was out of vocabulary)")]
    EmptyBag,
    #[error("invalid bag of words: {0}")]
    InvalidBag(String),
    #[error("vector dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("need at least two distinct in-vocabulary terms, found {0}")]
    InsufficientTerms(usize),
    #[error("text is empty")]
    EmptyText,
    #[error("score list is empty")]
    EmptyScores,
    #[error("non-finite score at position {0}")]
    NonFiniteScore(usize),
    #[error("bin count must be positive")]
    ZeroBins,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Transport(#[from] transport::TransportError),
}
