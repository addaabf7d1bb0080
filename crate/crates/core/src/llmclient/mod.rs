//! Completion backends: an HTTP client for completions-style endpoints and a
//! seeded mock that replays a fixture corpus.

mod http;
mod mock;
mod wire;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::promptgen::{BackendKind, GenerationParams, PromptError};

pub use http::HttpBackend;
pub use mock::MockBackend;
pub use wire::{postprocess, request_body, truncate_at_stop, CompletionRequestBody};

pub const DEFAULT_API_KEY_ENV: &str = "IDEAFORGE_API_KEY";

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] PromptError),
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("mock backend needs a non-empty fixture corpus")]
    EmptyCorpus,
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    pub max_concurrent: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::FineTuned,
            endpoint: "http://127.0.0.1:8000/v1/completions".into(),
            model: "default".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            max_concurrent: 4,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(ClientError::Config("timeout must be positive".into()));
        }
        if self.max_concurrent == 0 {
            return Err(ClientError::Config("max_concurrent must be at least 1".into()));
        }
        if self.endpoint.trim().is_empty() {
            return Err(ClientError::Config("endpoint is empty".into()));
        }
        Ok(())
    }

    /// Delay before retry number `attempt` (0-based): `base * 2^attempt`, capped.
    pub fn backoff_delay(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.min(32)).unwrap_or(u64::MAX);
        let ms = self
            .backoff_base_ms
            .saturating_mul(factor)
            .min(self.backoff_max_ms.max(self.backoff_base_ms));
        Duration::from_millis(ms)
    }

    /// The full sequence of delays a request can go through.
    pub fn retry_schedule(&self) -> Vec<Duration> {
        (0..self.max_retries).map(|a| self.backoff_delay(a)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub prompt_echo_removed: bool,
    pub latency_ms: u64,
}

/// One completion call. `sequence` identifies the request within a run so
/// that stateless backends (the mock) can be replayed exactly.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub params: &'a GenerationParams,
    pub sequence: u64,
}

#[async_trait]
pub trait CompletionBackend: Send + Sync {
    /// Returns exactly `params.samples_per_request` results, in order.
    async fn complete(&self, request: CompletionRequest<'_>) -> Result<Vec<CompletionResult>, ClientError>;

    /// Short provenance string for run metadata.
    fn describe(&self) -> String;
}

/// One-shot helper: build an HTTP backend for `cfg` and issue one request.
pub async fn complete(
    prompt: &str,
    params: &GenerationParams,
    cfg: &BackendConfig,
) -> Result<Vec<CompletionResult>, ClientError> {
    HttpBackend::new(cfg.clone())?
        .complete(CompletionRequest {
            prompt,
            params,
            sequence: 0,
        })
        .await
}
