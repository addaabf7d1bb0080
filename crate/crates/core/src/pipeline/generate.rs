use futures::stream::{self, StreamExt};

use super::concept::{prompt_hash, Concept, ConceptLog, RunMeta, RunStatus};
use super::{PipelineError, RunConfig};
use crate::clock;
use crate::corpus::parse_corpus;
use crate::llmclient::{CompletionBackend, CompletionRequest, HttpBackend, MockBackend};
use crate::promptgen::{build_condition_stub, build_fewshot_prompt, BackendKind};

/// Everything persisted by a finished generation run.
#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub concepts: Vec<Concept>,
    pub meta: RunMeta,
}

/// The exact prompt sent for every request of the run.
pub fn build_prompt(cfg: &RunConfig) -> Result<String, PipelineError> {
    match cfg.backend.client.kind {
        BackendKind::FineTuned => Ok(build_condition_stub(&cfg.task)?),
        BackendKind::FewShot => {
            let path = match &cfg.prompt.few_shot_examples {
                Some(p) => cfg.resolve(p),
                None => cfg.records_path(),
            };
            let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
            let examples = parse_corpus(cfg.task.kind(), &text, &cfg.task.layout)?;
            let block = build_fewshot_prompt(&examples, &cfg.task, cfg.seed, cfg.few_shot_count())?;
            Ok(block.render())
        }
    }
}

/// The backend described by the config: the seeded mock or the HTTP client.
pub fn backend_for(cfg: &RunConfig) -> Result<Box<dyn CompletionBackend>, PipelineError> {
    if !cfg.backend.mock {
        return Ok(Box::new(HttpBackend::new(cfg.backend.client.clone())?));
    }
    let mock = match &cfg.backend.mock_corpus {
        Some(p) => {
            let path = cfg.resolve(p);
            let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
            MockBackend::from_lines(&text, cfg.seed)?
        }
        None => {
            // Replay prepared records as if a model had produced them: the
            // record text after its condition stub, separator included.
            let path = cfg.records_path();
            let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
            let layout = &cfg.task.layout;
            let fixtures = parse_corpus(cfg.task.kind(), &text, layout)?
                .iter()
                .map(|r| {
                    let full = r.serialize(layout);
                    full[r.stub(layout).len()..].to_owned()
                })
                .collect();
            MockBackend::new(fixtures, cfg.seed)?
        }
    };
    Ok(Box::new(mock))
}

/// Generate `cfg.n_total` concepts, resuming from whatever is already persisted.
///
/// Request `k` of a fresh run covers concepts `k*n .. (k+1)*n` and carries
/// the index of its first concept as its sequence number, so an interrupted
/// and resumed run issues the same requests as an uninterrupted one. On a
/// backend failure every completed request before it is kept and
/// [`PipelineError::Incomplete`] reports the shortfall.
pub async fn run_generation(cfg: &RunConfig, backend: &dyn CompletionBackend) -> Result<GenerationOutcome, PipelineError> {
    let work_dir = cfg.work_dir();
    std::fs::create_dir_all(&work_dir).map_err(|e| PipelineError::io(&work_dir, e))?;
    let prompt = build_prompt(cfg)?;
    let hash = prompt_hash(&prompt);
    let params = cfg.generation_params()?;

    let (mut log, mut concepts) = ConceptLog::open(&cfg.concepts_path())?;
    if let Some(c) = concepts.iter().find(|c| c.prompt_hash != hash) {
        return Err(PipelineError::ResumeMismatch(format!(
            "{} was generated from a different prompt (hash {}, now {hash})",
            c.id, c.prompt_hash
        )));
    }
    let meta_path = cfg.concepts_meta_path();
    let started_at = match RunMeta::load(&meta_path) {
        Ok(m) if m.prompt_hash == hash && !concepts.is_empty() => m.started_at,
        _ => clock::now_rfc3339(),
    };
    if !concepts.is_empty() {
        tracing::info!(persisted = concepts.len(), "resuming generation");
    }

    let n = params.samples_per_request as usize;
    let prefix = cfg.task.completion_prefix();
    let mut last_error = None;
    {
        let starts: Vec<usize> = (concepts.len()..cfg.n_total).step_by(n).collect();
        let requests = stream::iter(starts)
            .map(|start| {
                let (prompt, params) = (&prompt, &params);
                async move {
                    let request = CompletionRequest {
                        prompt,
                        params,
                        sequence: start as u64,
                    };
                    (start, backend.complete(request).await)
                }
            })
            .buffered(cfg.backend.client.max_concurrent.max(1));
        futures::pin_mut!(requests);
        while let Some((start, result)) = requests.next().await {
            let results = match result {
                Ok(r) => r,
                Err(e) => {
                    tracing::error!(sequence = start, "generation stopped: {e}");
                    last_error = Some(e.to_string());
                    break;
                }
            };
            let wanted = n.min(cfg.n_total - start);
            let batch: Vec<Concept> = results
                .into_iter()
                .take(wanted)
                .enumerate()
                .map(|(i, r)| {
                    Concept::new(
                        start + i,
                        &cfg.task,
                        &hash,
                        format!("{prefix}{}", r.text),
                        r.finish_reason,
                        start as u64,
                        i as u32,
                    )
                })
                .collect();
            log.append(&batch)?;
            concepts.extend(batch);
        }
    }

    concepts.truncate(cfg.n_total);
    let shortfall = cfg.n_total - concepts.len();
    let meta = RunMeta {
        status: if shortfall == 0 { RunStatus::Complete } else { RunStatus::Partial },
        n_total: cfg.n_total,
        persisted: concepts.len(),
        shortfall,
        last_error: last_error.clone(),
        seed: cfg.seed,
        backend: backend.describe(),
        task: cfg.task.clone(),
        params,
        prompt,
        prompt_hash: hash,
        started_at,
        updated_at: clock::now_rfc3339(),
    };
    meta.save(&meta_path)?;
    if shortfall > 0 {
        return Err(PipelineError::Incomplete {
            persisted: meta.persisted,
            requested: cfg.n_total,
            reason: last_error.unwrap_or_else(|| "backend returned too few samples".into()),
        });
    }
    Ok(GenerationOutcome { concepts, meta })
}
