use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::concept::{read_concepts, Concept, ConceptScores, RunMeta};
use super::dedup::{dedup, Uniqueness};
use super::{PipelineError, RunConfig};
use crate::clock;
use crate::corpus::normalize_tokens;
use crate::embedding::{EmbeddingFormat, EmbeddingStore};
use crate::metrics::{distribution_summary, min_pairwise_relevancy, nbow, wmd, BagOfWords, DistributionSummary, MetricsError};
use crate::promptgen::TaskSpec;

/// Published mean term relevancy of the technical-term network.
pub const TECHNET_MEAN_RELEVANCY: f64 = 0.133;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub name: String,
    pub text: String,
}

/// Loaded stores and references for scoring.
#[derive(Debug)]
pub struct EvaluationInputs {
    pub task: TaskSpec,
    pub wmd_store: Option<EmbeddingStore>,
    pub relevancy_store: Option<EmbeddingStore>,
    pub references: Vec<Reference>,
    pub stopwords: bool,
    pub bins: usize,
}

impl EvaluationInputs {
    pub fn load(cfg: &RunConfig) -> Result<Self, PipelineError> {
        let ev = &cfg.evaluation;
        let load_store = |p: &Path, format: Option<EmbeddingFormat>| -> Result<EmbeddingStore, PipelineError> {
            let resolved = cfg.resolve(p);
            let format = format.unwrap_or_else(|| EmbeddingFormat::from_path(&resolved));
            let file = std::fs::File::open(&resolved).map_err(|e| PipelineError::io(&resolved, e))?;
            let (store, report) = EmbeddingStore::load(std::io::BufReader::new(file), format, p.display().to_string())?;
            tracing::info!(store = %p.display(), vocab = store.len(), duplicates = report.duplicates, "loaded embeddings");
            Ok(store)
        };
        let wmd_store = ev.embeddings.as_deref().map(|p| load_store(p, ev.embeddings_format)).transpose()?;
        let relevancy_store = ev
            .relevancy_embeddings
            .as_deref()
            .map(|p| load_store(p, ev.relevancy_format))
            .transpose()?;
        let references = ev
            .references
            .iter()
            .map(|(name, p)| {
                let path = cfg.resolve(p);
                let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
                Ok(Reference { name: name.clone(), text })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        Ok(EvaluationInputs {
            task: cfg.task.clone(),
            wmd_store,
            relevancy_store,
            references,
            stopwords: ev.stopwords,
            bins: ev.bins,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreInfo {
    pub label: String,
    pub dimension: usize,
    pub vocabulary: usize,
}

impl From<&EmbeddingStore> for StoreInfo {
    fn from(s: &EmbeddingStore) -> Self {
        StoreInfo {
            label: s.source_label().to_owned(),
            dimension: s.dimension(),
            vocabulary: s.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub task: TaskSpec,
    pub references: Vec<String>,
    pub wmd_store: Option<StoreInfo>,
    pub relevancy_store: Option<StoreInfo>,
    pub stopwords_removed: bool,
    /// Which concepts were scored; always the unique ones.
    pub scope: String,
    pub bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationInfo>,
    /// How condition keywords were extracted, when the run was prepared here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_method: Option<String>,
    pub evaluated_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationInfo {
    pub backend: String,
    pub prompt_hash: String,
    pub status: super::RunStatus,
    pub started_at: String,
    pub updated_at: String,
}

impl From<&RunMeta> for GenerationInfo {
    fn from(m: &RunMeta) -> Self {
        GenerationInfo {
            backend: m.backend.clone(),
            prompt_hash: m.prompt_hash.clone(),
            status: m.status,
            started_at: m.started_at.clone(),
            updated_at: m.updated_at.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub concept_id: String,
    pub normalized_text: String,
    pub token_count: usize,
    pub scores: ConceptScores,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unscorable: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnscorableCounts {
    pub wmd: BTreeMap<String, usize>,
    pub min_relevancy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub metric: String,
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub uniqueness: Uniqueness,
    pub rows: Vec<ScoreRow>,
    pub unscorable: UnscorableCounts,
    /// Keyed `wmd:<reference>`, `min_relevancy` and `token_count`.
    pub summaries: BTreeMap<String, DistributionSummary>,
    /// WMD between each pair of references, keyed `a|b`.
    pub reference_distances: BTreeMap<String, f64>,
    pub annotations: Vec<Annotation>,
}

impl EvaluationReport {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))
    }
}

/// Score the unique concepts against every reference and the relevancy store.
pub fn run_evaluation(concepts: &[Concept], inputs: &EvaluationInputs) -> Result<EvaluationReport, PipelineError> {
    if !inputs.references.is_empty() && inputs.wmd_store.is_none() {
        return Err(PipelineError::MissingStore("evaluation.embeddings"));
    }
    let (unique, uniqueness) = dedup(concepts);

    let mut reference_bags: Vec<(&str, Option<BagOfWords>)> = Vec::new();
    if let Some(store) = &inputs.wmd_store {
        for r in &inputs.references {
            let tokens = normalize_tokens(&r.text, inputs.stopwords);
            match nbow(&tokens, store) {
                Ok(bag) => reference_bags.push((&r.name, Some(bag))),
                Err(MetricsError::EmptyBag) => {
                    tracing::warn!(reference = %r.name, "reference has no in-vocabulary tokens");
                    reference_bags.push((&r.name, None));
                }
                Err(e) => return Err(e.into()),
            }
        }
        if !reference_bags.is_empty() && reference_bags.iter().all(|(_, b)| b.is_none()) {
            return Err(PipelineError::EmptyReferences);
        }
    }

    let rows = unique
        .par_iter()
        .map(|c| score_concept(c, inputs, &reference_bags))
        .collect::<Result<Vec<_>, PipelineError>>()?;

    let mut unscorable = UnscorableCounts::default();
    let mut summaries = BTreeMap::new();
    for (name, _) in &reference_bags {
        let values: Vec<f64> = rows.iter().filter_map(|r| r.scores.wmd[*name]).collect();
        unscorable.wmd.insert(name.to_string(), rows.len() - values.len());
        if !values.is_empty() {
            summaries.insert(format!("wmd:{name}"), distribution_summary(&values, inputs.bins)?);
        }
    }
    if inputs.relevancy_store.is_some() {
        let values: Vec<f64> = rows.iter().filter_map(|r| r.scores.min_relevancy).collect();
        unscorable.min_relevancy = rows.len() - values.len();
        if !values.is_empty() {
            summaries.insert("min_relevancy".into(), distribution_summary(&values, inputs.bins)?);
        }
    }
    if !rows.is_empty() {
        let lengths: Vec<f64> = rows.iter().map(|r| r.token_count as f64).collect();
        summaries.insert("token_count".into(), distribution_summary(&lengths, inputs.bins)?);
    }

    let mut reference_distances = BTreeMap::new();
    if let Some(store) = &inputs.wmd_store {
        for (i, (a, bag_a)) in reference_bags.iter().enumerate() {
            for (b, bag_b) in &reference_bags[i + 1..] {
                if let (Some(x), Some(y)) = (bag_a, bag_b) {
                    reference_distances.insert(format!("{a}|{b}"), wmd(x, y, store)?);
                }
            }
        }
    }

    let mut annotations = Vec::new();
    if inputs.relevancy_store.is_some() {
        annotations.push(Annotation {
            metric: "min_relevancy".into(),
            label: "reference mean term relevancy".into(),
            value: TECHNET_MEAN_RELEVANCY,
        });
    }

    Ok(EvaluationReport {
        metadata: ReportMetadata {
            task: inputs.task.clone(),
            references: reference_bags.iter().map(|(n, _)| n.to_string()).collect(),
            wmd_store: inputs.wmd_store.as_ref().map(StoreInfo::from),
            relevancy_store: inputs.relevancy_store.as_ref().map(StoreInfo::from),
            stopwords_removed: inputs.stopwords,
            scope: "unique".into(),
            bins: inputs.bins,
            seed: None,
            config: None,
            generation: None,
            keyword_method: None,
            evaluated_at: clock::now_rfc3339(),
        },
        uniqueness,
        rows,
        unscorable,
        summaries,
        reference_distances,
        annotations,
    })
}

fn score_concept(
    c: &Concept,
    inputs: &EvaluationInputs,
    references: &[(&str, Option<BagOfWords>)],
) -> Result<ScoreRow, PipelineError> {
    let tokens = normalize_tokens(&c.raw_text, inputs.stopwords);
    let mut scores = ConceptScores::default();
    let mut unscorable = Vec::new();

    if let Some(store) = &inputs.wmd_store {
        let bag = match nbow(&tokens, store) {
            Ok(bag) => Some(bag),
            Err(MetricsError::EmptyBag) => None,
            Err(e) => return Err(e.into()),
        };
        if bag.is_none() && !references.is_empty() {
            unscorable.push("wmd: no in-vocabulary tokens".to_owned());
        }
        for (name, reference) in references {
            let value = match (&bag, reference) {
                (Some(a), Some(b)) => Some(wmd(a, b, store)?),
                _ => None,
            };
            scores.wmd.insert(name.to_string(), value);
        }
    }

    if let Some(store) = &inputs.relevancy_store {
        match min_pairwise_relevancy(&tokens, store) {
            Ok(r) => {
                scores.min_relevancy = Some(r.value);
                scores.min_pair = Some(r.pair);
            }
            Err(MetricsError::InsufficientTerms(n)) => {
                unscorable.push(format!("min_relevancy: {n} in-vocabulary term(s)"));
            }
            Err(e) => return Err(e.into()),
        }
    }

    Ok(ScoreRow {
        concept_id: c.id.clone(),
        normalized_text: c.normalized_text.clone(),
        token_count: c.token_count,
        scores,
        unscorable,
    })
}

/// Load the persisted concepts of a run and evaluate them with its config.
pub fn evaluate_run(cfg: &RunConfig) -> Result<EvaluationReport, PipelineError> {
    let concepts = read_concepts(&cfg.concepts_path())?;
    let meta = RunMeta::load(&cfg.concepts_meta_path()).ok();
    if let Some(m) = &meta {
        if m.shortfall > 0 {
            tracing::warn!(shortfall = m.shortfall, "evaluating a partial generation run");
        }
    }
    let inputs = EvaluationInputs::load(cfg)?;
    let mut report = run_evaluation(&concepts, &inputs)?;
    report.metadata.seed = Some(cfg.seed);
    report.metadata.config = Some(serde_json::to_value(cfg).map_err(|e| PipelineError::Format(e.to_string()))?);
    report.metadata.generation = meta.as_ref().map(GenerationInfo::from);
    report.metadata.keyword_method = super::PrepareManifest::load(&cfg.manifest_path())
        .ok()
        .and_then(|m| m.keyword_method);
    Ok(report)
}
