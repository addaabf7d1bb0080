use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::corpus::normalize_tokens;

/// Number of tokens under the corpus tokenizer (stopwords kept).
pub fn token_length(text: &str) -> Result<usize, MetricsError> {
    match normalize_tokens(text, false).len() {
        0 => Err(MetricsError::EmptyText),
        n => Ok(n),
    }
}

/// Equal-width histogram over `[min, max]` plus summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub count: usize,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// 25th, 50th and 75th percentiles, linearly interpolated.
    pub quartiles: [f64; 3],
}

pub fn distribution_summary(scores: &[f64], bin_count: usize) -> Result<DistributionSummary, MetricsError> {
    if bin_count == 0 {
        return Err(MetricsError::ZeroBins);
    }
    if scores.is_empty() {
        return Err(MetricsError::EmptyScores);
    }
    if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(pos));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let width = (max - min) / bin_count as f64;

    let bin_edges = (0..=bin_count)
        .map(|k| if k == bin_count { max } else { min + width * k as f64 })
        .collect();
    let mut counts = vec![0usize; bin_count];
    for &s in scores {
        let k = if width > 0.0 {
            (((s - min) / width).floor() as usize).min(bin_count - 1)
        } else {
            0
        };
        counts[k] += 1;
    }

    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(DistributionSummary {
        count: scores.len(),
        bin_edges,
        counts,
        mean,
        min,
        max,
        quartiles: [
            percentile(&sorted, 0.25),
            percentile(&sorted, 0.5),
            percentile(&sorted, 0.75),
        ],
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
