use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{IngestFormat, TaskKind};
use crate::embedding::EmbeddingFormat;
use crate::llmclient::BackendConfig;
use crate::promptgen::{default_params_with_separator, BackendKind, GenerationParams, TaskSpec};

pub const DEFAULT_N_TOTAL: usize = 500;
pub const DEFAULT_BINS: usize = 30;

/// One experiment: what to generate, from which backend, and how to score it.
///
/// Relative paths are resolved against the directory of the config file.
/// The config is kept exactly as written so that snapshots embedded in
/// reports do not depend on where the run happens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_total")]
    pub n_total: usize,
    /// Holds prepared records, concepts and the evaluation result.
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    /// Defaults to `<work_dir>/report`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_dir: Option<PathBuf>,
    pub task: TaskSpec,
    #[serde(default)]
    pub backend: BackendSection,
    #[serde(default)]
    pub generation: GenerationOverrides,
    #[serde(default)]
    pub prompt: PromptSection,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_n_total() -> usize {
    DEFAULT_N_TOTAL
}

fn default_work_dir() -> PathBuf {
    PathBuf::from("run")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendSection {
    #[serde(flatten)]
    pub client: BackendConfig,
    /// Use the deterministic mock backend instead of HTTP.
    #[serde(default)]
    pub mock: bool,
    /// Fixture completions for the mock, one per line. Defaults to the
    /// completions of the prepared records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_corpus: Option<PathBuf>,
}

/// Per-field overrides on top of the task/backend sampling profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presence_penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_request: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptSection {
    /// Example records for few-shot backends. Defaults to the prepared records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub few_shot_examples: Option<PathBuf>,
    /// Defaults to 5 for analogy tasks and 10 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub few_shot_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default = "default_ingest_format")]
    pub format: IngestFormat,
    /// Titles must have strictly more words than this.
    #[serde(default = "default_min_words")]
    pub min_words: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub take_latest: Option<usize>,
    #[serde(default = "default_max_ngram")]
    pub max_ngram: usize,
    /// Vectors for keyword extraction. Defaults to `evaluation.embeddings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_embeddings: Option<PathBuf>,
}

fn default_ingest_format() -> IngestFormat {
    IngestFormat::Jsonl
}

fn default_min_words() -> usize {
    3
}

fn default_max_ngram() -> usize {
    2
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            input: None,
            format: default_ingest_format(),
            min_words: default_min_words(),
            take_latest: None,
            max_ngram: default_max_ngram(),
            keyword_embeddings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    /// General-purpose vectors for WMD.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings_format: Option<EmbeddingFormat>,
    /// Technical-term vectors for minimum pairwise relevancy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevancy_embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevancy_format: Option<EmbeddingFormat>,
    #[serde(default = "default_true")]
    pub stopwords: bool,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Reference documents for WMD, by name.
    #[serde(default)]
    pub references: BTreeMap<String, PathBuf>,
}

fn default_true() -> bool {
    true
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            embeddings: None,
            embeddings_format: None,
            relevancy_embeddings: None,
            relevancy_format: None,
            stopwords: true,
            bins: DEFAULT_BINS,
            references: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Minimal config for a task with every section at its default.
    pub fn new(task: TaskSpec) -> Self {
        RunConfig {
            seed: 0,
            n_total: DEFAULT_N_TOTAL,
            work_dir: default_work_dir(),
            report_dir: None,
            task,
            backend: BackendSection::default(),
            generation: GenerationOverrides::default(),
            prompt: PromptSection::default(),
            corpus: CorpusSection::default(),
            evaluation: EvaluationSection::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n_total == 0 {
            return Err(PipelineError::Config("n_total must be at least 1".into()));
        }
        if self.evaluation.bins == 0 {
            return Err(PipelineError::Config("evaluation.bins must be positive".into()));
        }
        if self.prompt.few_shot_count == Some(0) {
            return Err(PipelineError::Config("prompt.few_shot_count must be positive".into()));
        }
        self.task.validate()?;
        self.backend.client.validate()?;
        self.generation_params()?;
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn work_dir(&self) -> PathBuf {
        self.resolve(&self.work_dir)
    }

    pub fn report_dir(&self) -> PathBuf {
        match &self.report_dir {
            Some(d) => self.resolve(d),
            None => self.work_dir().join("report"),
        }
    }

    pub fn records_path(&self) -> PathBuf {
        self.work_dir().join("records.txt")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.work_dir().join("manifest.json")
    }

    pub fn concepts_path(&self) -> PathBuf {
        self.work_dir().join("concepts.jsonl")
    }

    pub fn concepts_meta_path(&self) -> PathBuf {
        self.work_dir().join("concepts.meta.json")
    }

    pub fn evaluation_path(&self) -> PathBuf {
        self.work_dir().join("evaluation.json")
    }

    pub fn few_shot_count(&self) -> usize {
        self.prompt.few_shot_count.unwrap_or(match self.task.kind() {
            TaskKind::AnalogyDriven => 5,
            _ => 10,
        })
    }

    /// The task/backend profile with the configured overrides applied.
    pub fn generation_params(&self) -> Result<GenerationParams, PipelineError> {
        let backend: BackendKind = self.backend.client.kind;
        let mut p = default_params_with_separator(self.task.kind(), backend, &self.task.layout.separator);
        let o = &self.generation;
        if let Some(v) = o.max_tokens {
            p.max_tokens = v;
        }
        if let Some(v) = o.temperature {
            p.temperature = v;
        }
        if let Some(v) = o.top_k {
            if backend.supports_top_k() {
                p.top_k = Some(v);
            } else {
                tracing::warn!("top_k is ignored by few-shot backends");
            }
        }
        if let Some(v) = o.top_p {
            p.top_p = v;
        }
        if let Some(v) = &o.stop {
            p.stop = v.clone();
        }
        if let Some(v) = o.presence_penalty {
            p.presence_penalty = v;
        }
        if let Some(v) = o.frequency_penalty {
            p.frequency_penalty = v;
        }
        if let Some(v) = o.samples_per_request {
            p.samples_per_request = v;
        }
        p.validate()?;
        Ok(p)
    }
}
