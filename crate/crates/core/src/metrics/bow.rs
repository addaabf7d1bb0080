use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::embedding::EmbeddingStore;

const MASS_TOLERANCE: f64 = 1e-9;

/// Normalized bag-of-words: unique tokens with strictly positive weights
/// summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagOfWords {
    items: Vec<(String, f64)>,
}

impl BagOfWords {
    pub fn new(items: Vec<(String, f64)>) -> Result<Self, MetricsError> {
        if items.is_empty() {
            return Err(MetricsError::EmptyBag);
        }
        let mut seen = std::collections::HashSet::new();
        for (token, w) in &items {
            if !seen.insert(token.as_str()) {
                return Err(MetricsError::InvalidBag(format!("duplicate token {token:?}")));
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(MetricsError::InvalidBag(format!(
                    "weight of {token:?} must be positive, got {w}"
                )));
            }
        }
        let total: f64 = items.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(MetricsError::InvalidBag(format!("weights sum to {total}")));
        }
        Ok(BagOfWords { items })
    }

    pub fn items(&self) -> &[(String, f64)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.items.iter().map(|(_, w)| *w).collect()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(t, _)| t.as_str())
    }
}

/// Count-normalized bag over the in-vocabulary tokens, in first-occurrence
/// order. Out-of-vocabulary tokens are dropped.
pub fn nbow<S: AsRef<str>>(tokens: &[S], store: &EmbeddingStore) -> Result<BagOfWords, MetricsError> {
    let mut order: Vec<&str> = Vec::new();
    let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for token in tokens.iter().map(AsRef::as_ref) {
        if !store.contains(token) {
            continue;
        }
        let count = counts.entry(token).or_insert(0);
        if *count == 0 {
            order.push(token);
        }
        *count += 1;
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(MetricsError::EmptyBag);
    }
    let items = order
        .into_iter()
        .map(|t| (t.to_owned(), counts[t] as f64 / total as f64))
        .collect();
    BagOfWords::new(items)
}
