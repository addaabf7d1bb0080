use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::embedding::EmbeddingStore;

/// The least relevant term pair of a concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevancyScore {
    pub value: f64,
    pub pair: (String, String),
}

/// Minimum cosine over all unordered pairs of distinct in-vocabulary terms.
///
/// Out-of-vocabulary and zero-norm terms are ignored. Pairs are reported in
/// lexicographic order and ties resolve to the lexicographically smallest pair.
pub fn min_pairwise_relevancy<S: AsRef<str>>(
    terms: &[S],
    store: &EmbeddingStore,
) -> Result<RelevancyScore, MetricsError> {
    let mut vocab: Vec<&str> = terms
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| store.norm(t).is_some_and(|n| n > 0.0))
        .collect();
    vocab.sort_unstable();
    vocab.dedup();
    if vocab.len() < 2 {
        return Err(MetricsError::InsufficientTerms(vocab.len()));
    }

    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..vocab.len() {
        for j in i + 1..vocab.len() {
            let c = store.cosine(vocab[i], vocab[j])?;
            // Pairs are visited in lexicographic order, so strict < keeps the first tie.
            if best.is_none_or(|(v, _, _)| c < v) {
                best = Some((c, i, j));
            }
        }
    }
    let (value, i, j) = best.expect("at least one pair");
    Ok(RelevancyScore {
        value,
        pair: (vocab[i].to_owned(), vocab[j].to_owned()),
    })
}
