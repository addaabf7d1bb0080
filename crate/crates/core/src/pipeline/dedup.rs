use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::Concept;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uniqueness {
    pub total: usize,
    pub unique: usize,
    /// `unique / total`, or 0 for an empty run.
    pub ratio: f64,
}

impl Uniqueness {
    pub fn new(total: usize, unique: usize) -> Self {
        let ratio = if total == 0 { 0.0 } else { unique as f64 / total as f64 };
        Uniqueness { total, unique, ratio }
    }
}

/// Keep the first concept of every distinct normalized text.
///
/// The ratio does not depend on input order; which duplicate is kept does.
pub fn dedup(concepts: &[Concept]) -> (Vec<Concept>, Uniqueness) {
    let mut seen = HashSet::new();
    let unique: Vec<Concept> = concepts
        .iter()
        .filter(|c| seen.insert(c.normalized_text.as_str()))
        .cloned()
        .collect();
    let stats = Uniqueness::new(concepts.len(), unique.len());
    (unique, stats)
}
