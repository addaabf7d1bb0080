use super::{normalize_tokens, CorpusError, SourceDocument};
use crate::embedding::{cosine_vectors, EmbeddingStore};

/// Embedding-centroid keyword extractor.
///
/// Candidates are the n-grams (up to `max_ngram`) of the normalized token
/// sequence. A candidate's vector is its underscore-joined entry when the
/// store has one, otherwise the mean of its member vectors. The candidate most
/// cosine-similar to the document centroid wins; ties go to the earliest,
/// then shortest, candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeywordExtractor {
    pub max_ngram: usize,
    pub remove_stopwords: bool,
}

impl Default for KeywordExtractor {
    fn default() -> Self {
        KeywordExtractor {
            max_ngram: 2,
            remove_stopwords: true,
        }
    }
}

impl KeywordExtractor {
    pub fn extract(&self, text: &str, store: &EmbeddingStore) -> Result<String, CorpusError> {
        if self.max_ngram == 0 {
            return Err(CorpusError::InvalidField {
                field: "max_ngram",
                reason: "must be positive".into(),
            });
        }
        let tokens = normalize_tokens(text, self.remove_stopwords);
        let vectors: Vec<Option<&[f32]>> = tokens.iter().map(|t| store.get(t)).collect();

        let dim = store.dimension();
        let mut centroid = vec![0.0f64; dim];
        let mut n_in_vocab = 0usize;
        for v in vectors.iter().flatten() {
            add(&mut centroid, v);
            n_in_vocab += 1;
        }
        if n_in_vocab == 0 {
            return Err(CorpusError::NoCandidates);
        }
        centroid.iter_mut().for_each(|x| *x /= n_in_vocab as f64);

        let mut best: Option<(f64, usize, usize)> = None;
        for start in 0..tokens.len() {
            for len in 1..=self.max_ngram.min(tokens.len() - start) {
                let Some(vector) = candidate_vector(&tokens[start..start + len], &vectors[start..start + len], store)
                else {
                    continue;
                };
                let Some(score) = cosine_vectors(&vector, &centroid) else {
                    continue;
                };
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, start, len));
                }
            }
        }
        let (_, start, len) = best.ok_or(CorpusError::NoCandidates)?;
        Ok(tokens[start..start + len].join(" "))
    }
}

fn add(acc: &mut [f64], v: &[f32]) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += f64::from(x);
    }
}

fn candidate_vector(words: &[String], vectors: &[Option<&[f32]>], store: &EmbeddingStore) -> Option<Vec<f64>> {
    if words.len() > 1 {
        if let Some(v) = store.get(&words.join("_")) {
            return Some(v.iter().map(|&x| f64::from(x)).collect());
        }
    }
    let mut mean = vec![0.0; store.dimension()];
    for v in vectors {
        add(&mut mean, (*v)?);
    }
    mean.iter_mut().for_each(|x| *x /= words.len() as f64);
    Some(mean)
}

/// Keyword of a document with default stopword handling.
pub fn extract_keyword(doc: &SourceDocument, store: &EmbeddingStore, max_ngram: usize) -> Result<String, CorpusError> {
    KeywordExtractor {
        max_ngram,
        ..KeywordExtractor::default()
    }
    .extract(&doc.text, store)
}
