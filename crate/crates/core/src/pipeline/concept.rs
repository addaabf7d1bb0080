use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::llmclient::FinishReason;
use crate::metrics::token_length;
use crate::promptgen::{GenerationParams, TaskSpec};

/// One generated design concept, as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub task: TaskSpec,
    pub prompt_hash: String,
    pub raw_text: String,
    pub normalized_text: String,
    /// Zero when the text has no tokens.
    pub token_count: usize,
    pub finish_reason: FinishReason,
    /// `sequence` of the request that produced this concept.
    pub request: u64,
    /// Position within that request's samples.
    pub sample: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ConceptScores>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptScores {
    /// WMD per reference name; `None` when the concept has no in-vocabulary tokens.
    pub wmd: BTreeMap<String, Option<f64>>,
    pub min_relevancy: Option<f64>,
    pub min_pair: Option<(String, String)>,
}

impl Concept {
    pub fn new(index: usize, task: &TaskSpec, prompt_hash: &str, raw_text: String, finish_reason: FinishReason, request: u64, sample: u32) -> Self {
        Concept {
            id: concept_id(index),
            task: task.clone(),
            prompt_hash: prompt_hash.to_owned(),
            normalized_text: normalize_concept_text(&raw_text),
            token_count: token_length(&raw_text).unwrap_or(0),
            raw_text,
            finish_reason,
            request,
            sample,
            scores: None,
        }
    }
}

pub fn concept_id(index: usize) -> String {
    format!("c{index:06}")
}

/// Lowercase, collapse whitespace, trim, and drop trailing sentence punctuation.
pub fn normalize_concept_text(raw: &str) -> String {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_end_matches(|c: char| matches!(c, '.' | '!' | '?' | ';' | ':' | ',' | '…') || c.is_whitespace())
        .to_owned()
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
}

/// Sidecar describing a generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub status: RunStatus,
    pub n_total: usize,
    pub persisted: usize,
    pub shortfall: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
    pub seed: u64,
    pub backend: String,
    pub task: TaskSpec,
    pub params: GenerationParams,
    pub prompt: String,
    pub prompt_hash: String,
    pub started_at: String,
    pub updated_at: String,
}

impl RunMeta {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_json(path, self)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Format(e.to_string()))?;
    text.push('\n');
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| PipelineError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

/// Append-only one-concept-per-line log.
pub struct ConceptLog {
    path: PathBuf,
    file: File,
}

impl ConceptLog {
    /// Open for appending, first reading back every complete record.
    /// A torn final line (no trailing newline or unparsable) is cut off.
    pub fn open(path: &Path) -> Result<(Self, Vec<Concept>), PipelineError> {
        let mut concepts = Vec::new();
        let mut valid_len = 0usize;
        if path.exists() {
            let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
            for line in bytes.split_inclusive(|&b| b == b'\n') {
                if line.last() != Some(&b'\n') {
                    tracing::warn!("dropping torn final concept record");
                    break;
                }
                match serde_json::from_slice::<Concept>(line) {
                    Ok(c) => {
                        concepts.push(c);
                        valid_len += line.len();
                    }
                    Err(e) => {
                        tracing::warn!(line = concepts.len() + 1, "dropping unreadable concept records from here on: {e}");
                        break;
                    }
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| PipelineError::io(path, e))?;
        file.set_len(valid_len as u64).map_err(|e| PipelineError::io(path, e))?;
        Ok((
            ConceptLog {
                path: path.to_path_buf(),
                file,
            },
            concepts,
        ))
    }

    pub fn append(&mut self, batch: &[Concept]) -> Result<(), PipelineError> {
        let mut buf = Vec::new();
        for c in batch {
            serde_json::to_writer(&mut buf, c).map_err(|e| PipelineError::Format(e.to_string()))?;
            buf.push(b'\n');
        }
        self.file.write_all(&buf).map_err(|e| PipelineError::io(&self.path, e))?;
        self.file.flush().map_err(|e| PipelineError::io(&self.path, e))
    }
}

/// Read a persisted concept log without modifying it.
pub fn read_concepts(path: &Path) -> Result<Vec<Concept>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(n, line)| {
            serde_json::from_str(line).map_err(|e| PipelineError::Format(format!("{}:{}: {e}", path.display(), n + 1)))
        })
        .collect()
}
