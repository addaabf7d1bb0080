use serde::{Deserialize, Serialize};

use super::concept::write_json;
use super::{PipelineError, RunConfig};
use crate::clock;
use crate::corpus::{
    filter_titles, format_analogy_record, format_domain_record, format_reddot_record, ingest, write_corpus, KeywordExtractor,
    RecordLayout, SourceDocument, TaskKind, TrainingRecord,
};
use crate::embedding::{EmbeddingFormat, EmbeddingStore};

/// Bookkeeping for one `prepare` run, written next to the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareManifest {
    pub task_kind: TaskKind,
    pub input: String,
    pub ingested: usize,
    /// Input lines that could not be read as documents.
    pub malformed: usize,
    /// Dropped by the title word-count / recency filter.
    pub filtered_out: usize,
    /// Documents without the fields this task needs (category, domains).
    pub missing_fields: usize,
    pub keyword_failures: usize,
    /// Documents whose fields cannot be laid out as a record (multi-line, separator inside, ...).
    pub rejected: usize,
    pub records: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_method: Option<String>,
    pub layout: RecordLayout,
    /// Whether the layout is the built-in reference one (labels and separator).
    pub reference_layout: bool,
    pub created_at: String,
}

/// Ingest `corpus.input`, build condition-first records for the task kind and
/// write `records.txt` and `manifest.json` to the work directory.
impl PrepareManifest {
    pub fn load(path: &std::path::Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<PrepareManifest, PipelineError> {
    let input = cfg
        .corpus
        .input
        .as_deref()
        .ok_or_else(|| PipelineError::Config("corpus.input is not set".into()))?;
    let path = cfg.resolve(input);
    let file = std::fs::File::open(&path).map_err(|e| PipelineError::io(&path, e))?;
    let ingested = ingest(file, cfg.corpus.format)?;
    let kind = cfg.task.kind();
    let total = ingested.documents.len();

    let mut manifest = PrepareManifest {
        task_kind: kind,
        input: input.display().to_string(),
        ingested: total,
        malformed: ingested.skipped,
        filtered_out: 0,
        missing_fields: 0,
        keyword_failures: 0,
        rejected: 0,
        records: 0,
        keyword_method: None,
        layout: cfg.task.layout.clone(),
        reference_layout: cfg.task.layout.is_default(),
        created_at: clock::now_rfc3339(),
    };

    let mut records = Vec::new();
    match kind {
        TaskKind::DomainSynthesis => {
            let docs = filter_titles(ingested.documents, cfg.corpus.min_words, cfg.corpus.take_latest)?;
            manifest.filtered_out = total - docs.len();
            let store = keyword_store(cfg)?;
            let extractor = KeywordExtractor {
                max_ngram: cfg.corpus.max_ngram,
                remove_stopwords: true,
            };
            manifest.keyword_method = Some(format!(
                "embedding centroid, n-grams up to {}, stopwords removed, vectors {}",
                extractor.max_ngram,
                store.source_label()
            ));
            for doc in &docs {
                match extractor.extract(&doc.text, &store) {
                    Ok(keyword) => push(&mut records, &mut manifest, format_domain_record(&keyword, doc.text.trim()), doc),
                    Err(e) => {
                        tracing::debug!(id = %doc.id, "no keyword: {e}");
                        manifest.keyword_failures += 1;
                    }
                }
            }
        }
        TaskKind::ProblemDriven => {
            for doc in &ingested.documents {
                match &doc.category {
                    Some(category) => push(&mut records, &mut manifest, format_reddot_record(category, doc.text.trim()), doc),
                    None => manifest.missing_fields += 1,
                }
            }
        }
        TaskKind::AnalogyDriven => {
            for doc in &ingested.documents {
                match (&doc.source_domain, &doc.target_domain) {
                    (Some(s), Some(t)) => push(&mut records, &mut manifest, format_analogy_record(s, t, doc.text.trim()), doc),
                    _ => manifest.missing_fields += 1,
                }
            }
        }
    }
    manifest.records = records.len();
    if records.is_empty() {
        return Err(PipelineError::Config(format!("{} produced no records", path.display())));
    }

    let work_dir = cfg.work_dir();
    std::fs::create_dir_all(&work_dir).map_err(|e| PipelineError::io(&work_dir, e))?;
    let records_path = cfg.records_path();
    let mut buf = Vec::new();
    write_corpus(&mut buf, &records, &cfg.task.layout).map_err(|e| PipelineError::io(&records_path, e))?;
    std::fs::write(&records_path, buf).map_err(|e| PipelineError::io(&records_path, e))?;
    write_json(&cfg.manifest_path(), &manifest)?;
    Ok(manifest)
}

fn push(
    records: &mut Vec<TrainingRecord>,
    manifest: &mut PrepareManifest,
    record: Result<TrainingRecord, crate::corpus::CorpusError>,
    doc: &SourceDocument,
) {
    match record {
        Ok(r) => records.push(r),
        Err(e) => {
            tracing::debug!(id = %doc.id, "record rejected: {e}");
            manifest.rejected += 1;
        }
    }
}

fn keyword_store(cfg: &RunConfig) -> Result<EmbeddingStore, PipelineError> {
    let (p, format) = match (&cfg.corpus.keyword_embeddings, &cfg.evaluation.embeddings) {
        (Some(p), _) => (p, None),
        (None, Some(p)) => (p, cfg.evaluation.embeddings_format),
        (None, None) => return Err(PipelineError::MissingStore("corpus.keyword_embeddings")),
    };
    let resolved = cfg.resolve(p);
    let format = format.unwrap_or_else(|| EmbeddingFormat::from_path(&resolved));
    let file = std::fs::File::open(&resolved).map_err(|e| PipelineError::io(&resolved, e))?;
    Ok(EmbeddingStore::load(std::io::BufReader::new(file), format, p.display().to_string())?.0)
}
