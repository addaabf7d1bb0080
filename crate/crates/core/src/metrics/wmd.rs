use serde::{Deserialize, Serialize};

use super::{transport, BagOfWords, MetricsError};
use crate::embedding::EmbeddingStore;

/// WMD of a concept against one named reference document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WmdScore {
    pub value: f64,
    pub reference_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBounds {
    /// Distance between the weighted centroids.
    pub wcd: f64,
    /// Relaxed WMD: the larger of the two one-sided relaxations.
    pub rwmd: f64,
}

/// Exact Word Mover's Distance between two bags resolved in `store`.
pub fn wmd(a: &BagOfWords, b: &BagOfWords, store: &EmbeddingStore) -> Result<f64, MetricsError> {
    let (wa, va) = resolve(a, store)?;
    let (wb, vb) = resolve(b, store)?;
    earth_movers_distance(&wa, &va, &wb, &vb)
}

/// Exact transport distance between two weighted point clouds with Euclidean
/// ground cost. Weights on each side must sum to the same total.
pub fn earth_movers_distance(
    a_weights: &[f64],
    a_points: &[&[f32]],
    b_weights: &[f64],
    b_points: &[&[f32]],
) -> Result<f64, MetricsError> {
    let cost = cost_matrix(a_points, b_points)?;
    if a_weights.len() != a_points.len() || b_weights.len() != b_points.len() {
        return Err(MetricsError::InvalidBag("weights and points differ in length".into()));
    }
    let plan = transport::solve(a_weights, b_weights, &cost)?;
    Ok(plan.cost.max(0.0))
}

/// Cheap lower bounds on [`wmd`]: `wcd <= wmd` and `rwmd <= wmd`.
pub fn wmd_lower_bounds(
    a: &BagOfWords,
    b: &BagOfWords,
    store: &EmbeddingStore,
) -> Result<LowerBounds, MetricsError> {
    let (wa, va) = resolve(a, store)?;
    let (wb, vb) = resolve(b, store)?;
    let cost = cost_matrix(&va, &vb)?;
    let n = vb.len();

    let ca = centroid(&wa, &va);
    let cb = centroid(&wb, &vb);
    let wcd = ca
        .iter()
        .zip(&cb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();

    let a_side: f64 = wa
        .iter()
        .enumerate()
        .map(|(i, w)| w * cost[i * n..(i + 1) * n].iter().copied().fold(f64::INFINITY, f64::min))
        .sum();
    let b_side: f64 = wb
        .iter()
        .enumerate()
        .map(|(j, w)| {
            w * (0..va.len())
                .map(|i| cost[i * n + j])
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(LowerBounds {
        wcd,
        rwmd: a_side.max(b_side),
    })
}

fn resolve<'s>(
    bag: &BagOfWords,
    store: &'s EmbeddingStore,
) -> Result<(Vec<f64>, Vec<&'s [f32]>), MetricsError> {
    if bag.is_empty() {
        return Err(MetricsError::EmptyBag);
    }
    let mut weights = Vec::with_capacity(bag.len());
    let mut points = Vec::with_capacity(bag.len());
    for (token, w) in bag.items() {
        points.push(store.vector(token)?);
        weights.push(*w);
    }
    Ok((weights, points))
}

fn cost_matrix(a: &[&[f32]], b: &[&[f32]]) -> Result<Vec<f64>, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyBag);
    }
    let dim = a[0].len();
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != dim) {
        return Err(MetricsError::DimensionMismatch(dim, p.len()));
    }
    let mut cost = Vec::with_capacity(a.len() * b.len());
    for p in a {
        for q in b {
            cost.push(euclidean(p, q));
        }
    }
    Ok(cost)
}

fn euclidean(p: &[f32], q: &[f32]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn centroid(weights: &[f64], points: &[&[f32]]) -> Vec<f64> {
    let mut c = vec![0.0; points[0].len()];
    for (w, p) in weights.iter().zip(points) {
        for (acc, &x) in c.iter_mut().zip(p.iter()) {
            *acc += w * f64::from(x);
        }
    }
    c
}
