//! Conditional design-concept generation toolkit.
//!
//! The crate prepares condition-first training and few-shot corpora, drives a
//! text-completion backend with fixed sampling profiles, and scores generated
//! concepts for diversity (reverse Word Mover's Distance against reference
//! documents) and novelty (minimum pairwise term relevancy).

pub mod clock;
pub mod corpus;
pub mod embedding;
pub mod llmclient;
pub mod metrics;
pub mod pipeline;

pub mod promptgen;

pub use embedding::{EmbeddingFormat, EmbeddingStore};
pub use metrics::BagOfWords;
