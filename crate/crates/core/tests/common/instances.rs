//! Random transport instances and bag triples over throwaway stores.

use ideaforge::{BagOfWords, EmbeddingStore};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A point on the probability simplex: normalized exponential draws, or the
/// uniform point one time in five so degenerate ties show up too.
pub fn simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    if rng.gen_bool(0.2) {
        return vec![1.0 / k as f64; k];
    }
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-12).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Uniform in `[-1, 1]^dim`, or on the integer grid `{-1, 0, 1}^dim` for a
/// share of points so that equal distances and coincident points occur.
pub fn point(rng: &mut ChaCha8Rng, dim: usize, grid: bool) -> Vec<f32> {
    (0..dim)
        .map(|_| if grid { rng.gen_range(-1i32..=1) as f32 } else { rng.gen_range(-1.0f32..=1.0) })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub dim: usize,
    pub a_points: Vec<Vec<f32>>,
    pub a_weights: Vec<f64>,
    pub b_points: Vec<Vec<f32>>,
    pub b_weights: Vec<f64>,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, max_side: usize, max_dim: usize) -> Self {
        let dim = rng.gen_range(1..=max_dim);
        let grid = rng.gen_bool(0.2);
        let m = rng.gen_range(1..=max_side);
        let n = rng.gen_range(1..=max_side);
        Instance {
            dim,
            a_points: (0..m).map(|_| point(rng, dim, grid)).collect(),
            a_weights: simplex(rng, m),
            b_points: (0..n).map(|_| point(rng, dim, grid)).collect(),
            b_weights: simplex(rng, n),
        }
    }

    /// Tokens `a0..` and `b0..` mapped to the instance points.
    pub fn store(&self) -> EmbeddingStore {
        let entries = self
            .a_points
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("a{i}"), p.clone()))
            .chain(self.b_points.iter().enumerate().map(|(j, p)| (format!("b{j}"), p.clone())));
        EmbeddingStore::from_entries(self.dim, entries, "instance").unwrap().0
    }

    pub fn bags(&self) -> (BagOfWords, BagOfWords) {
        let side = |prefix: &str, w: &[f64]| {
            BagOfWords::new(w.iter().enumerate().map(|(i, &x)| (format!("{prefix}{i}"), x)).collect()).unwrap()
        };
        (side("a", &self.a_weights), side("b", &self.b_weights))
    }
}

/// A shared vocabulary and three bags drawn from it.
pub struct Triple {
    pub store: EmbeddingStore,
    pub bags: [BagOfWords; 3],
}

impl Triple {
    pub fn random(rng: &mut ChaCha8Rng, vocab: usize, max_bag: usize, max_dim: usize) -> Self {
        let dim = rng.gen_range(1..=max_dim);
        let grid = rng.gen_bool(0.2);
        let entries: Vec<(String, Vec<f32>)> = (0..vocab).map(|k| (format!("w{k}"), point(rng, dim, grid))).collect();
        let store = EmbeddingStore::from_entries(dim, entries, "triple").unwrap().0;
        let bag = |rng: &mut ChaCha8Rng| {
            let size = rng.gen_range(1..=max_bag.min(vocab));
            let mut words: Vec<usize> = (0..vocab).collect();
            rand::seq::SliceRandom::shuffle(words.as_mut_slice(), rng);
            let weights = simplex(rng, size);
            BagOfWords::new(words[..size].iter().zip(weights).map(|(w, x)| (format!("w{w}"), x)).collect()).unwrap()
        };
        let bags = [bag(rng), bag(rng), bag(rng)];
        Triple { store, bags }
    }
}
