//! Generation-time prompts and sampling profiles.
//!
//! A fine-tuned backend only needs the condition stub of the task; a
//! prompt-only backend gets a few-shot block of example records followed by
//! that stub.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RecordLayout, TaskKind, TrainingRecord};

pub const MAX_STOP_SEQUENCES: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("task field {0} is empty")]
    MissingField(&'static str),
    #[error("need {needed} examples, only {available} available")]
    InsufficientExamples { needed: usize, available: usize },
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("example {index} is {found:?}, task is {expected:?}")]
    MixedTaskKinds {
        index: usize,
        expected: TaskKind,
        found: TaskKind,
    },
    #[error("invalid generation parameter: {0}")]
    InvalidParams(String),
}

/// Condition values of one generation task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskCondition {
    DomainSynthesis {
        target_domain: String,
    },
    ProblemDriven {
        category: String,
        /// May be a partial stem such as "Current electrocardiograph testing", or empty.
        #[serde(default)]
        problem_statement: String,
    },
    AnalogyDriven {
        source_domain: String,
        target_domain: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(flatten)]
    pub condition: TaskCondition,
    #[serde(default, skip_serializing_if = "RecordLayout::is_default")]
    pub layout: RecordLayout,
}

impl TaskSpec {
    pub fn new(condition: TaskCondition) -> Self {
        TaskSpec {
            condition,
            layout: RecordLayout::default(),
        }
    }

    pub fn domain(target_domain: &str) -> Self {
        Self::new(TaskCondition::DomainSynthesis {
            target_domain: target_domain.into(),
        })
    }

    pub fn problem(category: &str, problem_statement: &str) -> Self {
        Self::new(TaskCondition::ProblemDriven {
            category: category.into(),
            problem_statement: problem_statement.into(),
        })
    }

    pub fn analogy(source_domain: &str, target_domain: &str) -> Self {
        Self::new(TaskCondition::AnalogyDriven {
            source_domain: source_domain.into(),
            target_domain: target_domain.into(),
        })
    }

    pub fn kind(&self) -> TaskKind {
        match self.condition {
            TaskCondition::DomainSynthesis { .. } => TaskKind::DomainSynthesis,
            TaskCondition::ProblemDriven { .. } => TaskKind::ProblemDriven,
            TaskCondition::AnalogyDriven { .. } => TaskKind::AnalogyDriven,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let check = |name, value: &str| {
            if value.trim().is_empty() {
                Err(PromptError::MissingField(name))
            } else {
                Ok(())
            }
        };
        match &self.condition {
            TaskCondition::DomainSynthesis { target_domain } => check("target_domain", target_domain),
            TaskCondition::ProblemDriven { category, .. } => check("category", category),
            TaskCondition::AnalogyDriven {
                source_domain,
                target_domain,
            } => {
                check("source_domain", source_domain)?;
                check("target_domain", target_domain)
            }
        }
    }

    /// Text the backend prepends to every completion of this task, e.g. the
    /// open problem stem. Empty for the other kinds.
    pub fn completion_prefix(&self) -> &str {
        match &self.condition {
            TaskCondition::ProblemDriven {
                problem_statement, ..
            } => problem_statement,
            _ => "",
        }
    }

    /// Named condition values, for report columns.
    pub fn fields(&self) -> Vec<(&'static str, &str)> {
        match &self.condition {
            TaskCondition::DomainSynthesis { target_domain } => vec![("target_domain", target_domain)],
            TaskCondition::ProblemDriven {
                category,
                problem_statement,
            } => vec![("category", category), ("problem_statement", problem_statement)],
            TaskCondition::AnalogyDriven {
                source_domain,
                target_domain,
            } => vec![("source_domain", source_domain), ("target_domain", target_domain)],
        }
    }
}

/// The record serialization cut where the completion begins.
pub fn build_condition_stub(task: &TaskSpec) -> Result<String, PromptError> {
    task.validate()?;
    let layout = &task.layout;
    Ok(match &task.condition {
        TaskCondition::DomainSynthesis { target_domain } => layout.domain_stub(target_domain),
        TaskCondition::ProblemDriven {
            category,
            problem_statement,
        } => layout.reddot_stub(category, problem_statement),
        TaskCondition::AnalogyDriven {
            source_domain,
            target_domain,
        } => layout.analogy_stub(source_domain, target_domain),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotBlock {
    pub examples: Vec<TrainingRecord>,
    pub final_condition: String,
    pub layout: RecordLayout,
}

impl FewShotBlock {
    /// Example records, each followed by a newline, then the final stub.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.examples {
            out.push_str(&r.serialize(&self.layout));
            out.push('\n');
        }
        out.push_str(&self.final_condition);
        out
    }
}

/// Seeded selection of `sample_count` examples followed by the task stub.
///
/// Examples are put in a canonical order before sampling, so the block depends
/// only on the multiset of examples and the seed, never on input order.
pub fn build_fewshot_prompt(
    examples: &[TrainingRecord],
    task: &TaskSpec,
    seed: u64,
    sample_count: usize,
) -> Result<FewShotBlock, PromptError> {
    if sample_count == 0 {
        return Err(PromptError::ZeroSamples);
    }
    if examples.len() < sample_count {
        return Err(PromptError::InsufficientExamples {
            needed: sample_count,
            available: examples.len(),
        });
    }
    let kind = task.kind();
    if let Some((index, r)) = examples.iter().enumerate().find(|(_, r)| r.task_kind != kind) {
        return Err(PromptError::MixedTaskKinds {
            index,
            expected: kind,
            found: r.task_kind,
        });
    }
    let final_condition = build_condition_stub(task)?;

    let mut pool: Vec<(String, &TrainingRecord)> = examples
        .iter()
        .map(|r| (r.serialize(&task.layout), r))
        .collect();
    pool.sort_by(|a, b| a.0.cmp(&b.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    Ok(FewShotBlock {
        examples: pool
            .into_iter()
            .take(sample_count)
            .map(|(_, r)| r.clone())
            .collect(),
        final_condition,
        layout: task.layout.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// A model fine-tuned on the task corpus; accepts top_k, no penalties.
    #[default]
    FineTuned,
    /// A prompt-only base model; accepts penalties, no top_k.
    FewShot,
}

impl BackendKind {
    pub fn supports_top_k(self) -> bool {
        self == BackendKind::FineTuned
    }

    pub fn supports_penalties(self) -> bool {
        self == BackendKind::FewShot
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fine_tuned" | "fine-tuned" => Ok(BackendKind::FineTuned),
            "few_shot" | "few-shot" => Ok(BackendKind::FewShot),
            other => Err(format!("unknown backend kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    pub top_p: f64,
    #[serde(default)]
    pub stop: Vec<String>,
    #[serde(default)]
    pub presence_penalty: f64,
    #[serde(default)]
    pub frequency_penalty: f64,
    pub samples_per_request: u32,
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), PromptError> {
        let bad = |msg: String| Err(PromptError::InvalidParams(msg));
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.top_k == Some(0) {
            return bad("top_k must be positive".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p must be in (0, 1], got {}", self.top_p));
        }
        if self.stop.len() > MAX_STOP_SEQUENCES {
            return bad(format!("at most {MAX_STOP_SEQUENCES} stop sequences"));
        }
        if self.stop.iter().any(String::is_empty) {
            return bad("stop sequences must be non-empty".into());
        }
        if !(self.presence_penalty.is_finite() && self.frequency_penalty.is_finite()) {
            return bad("penalties must be finite".into());
        }
        if self.samples_per_request == 0 {
            return bad("samples_per_request must be positive".into());
        }
        Ok(())
    }
}

pub const DEFAULT_TEMPERATURE: f64 = 0.9;
pub const DEFAULT_TOP_K: u32 = 50;
pub const DEFAULT_TOP_P: f64 = 1.0;
pub const TITLE_MAX_TOKENS: u32 = 64;
pub const DESCRIPTION_MAX_TOKENS: u32 = 400;

/// Sampling profile for a task/backend pair with the default record separator.
pub fn default_params(task_kind: TaskKind, backend: BackendKind) -> GenerationParams {
    default_params_with_separator(task_kind, backend, crate::corpus::RecordLayout::default().separator.as_str())
}

pub fn default_params_with_separator(task_kind: TaskKind, backend: BackendKind, separator: &str) -> GenerationParams {
    let mut stop = Vec::new();
    if task_kind.is_title() {
        stop.push("\n".to_owned());
    }
    stop.push(separator.to_owned());
    GenerationParams {
        max_tokens: if task_kind.is_title() {
            TITLE_MAX_TOKENS
        } else {
            DESCRIPTION_MAX_TOKENS
        },
        temperature: DEFAULT_TEMPERATURE,
        top_k: backend.supports_top_k().then_some(DEFAULT_TOP_K),
        top_p: DEFAULT_TOP_P,
        stop,
        presence_penalty: 0.0,
        frequency_penalty: 0.0,
        samples_per_request: 1,
    }
}
