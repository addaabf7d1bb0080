//! End-to-end experiment orchestration: corpus preparation, generation with
//! resumable persistence, deduplication, scoring and report export.
//!
//! A run lives in one work directory:
//!
//! | file | written by |
//! |---|---|
//! | `records.txt`, `manifest.json` | [`prepare`] |
//! | `concepts.jsonl`, `concepts.meta.json` | [`run_generation`] |
//! | `evaluation.json` | [`evaluate_run`] |
//! | `report/report.csv`, `report/summary.json`, `report/histograms/*.csv` | [`export_report`] |

mod concept;
mod config;
mod dedup;
mod evaluate;
mod generate;
mod prepare;
mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::embedding::EmbeddingError;
use crate::llmclient::ClientError;
use crate::metrics::MetricsError;
use crate::promptgen::PromptError;

pub use concept::{concept_id, normalize_concept_text, prompt_hash, read_concepts, Concept, ConceptLog, ConceptScores, RunMeta, RunStatus};
pub use config::{
    BackendSection, CorpusSection, EvaluationSection, GenerationOverrides, PromptSection, RunConfig, DEFAULT_BINS, DEFAULT_N_TOTAL,
};
pub use dedup::{dedup, Uniqueness};
pub use evaluate::{
    evaluate_run, run_evaluation, Annotation, EvaluationInputs, EvaluationReport, GenerationInfo, Reference, ReportMetadata, ScoreRow,
    StoreInfo, UnscorableCounts, TECHNET_MEAN_RELEVANCY,
};
pub use generate::{backend_for, build_prompt, run_generation, GenerationOutcome};
pub use prepare::{prepare, PrepareManifest};
pub use report::{export_report, ExportFormat};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("cannot resume: {0}")]
    ResumeMismatch(String),
    #[error("generation incomplete: {persisted} of {requested} concepts persisted ({reason})")]
    Incomplete {
        persisted: usize,
        requested: usize,
        reason: String,
    },
    #[error("{0} is required but not configured")]
    MissingStore(&'static str),
    #[error("every reference is empty after dropping out-of-vocabulary tokens")]
    EmptyReferences,
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
