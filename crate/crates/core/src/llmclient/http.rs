use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use reqwest::StatusCode;
use tokio::sync::Semaphore;
use tracing::{debug, warn};

use super::wire::{parse_response, request_body};
use super::{BackendConfig, ClientError, CompletionBackend, CompletionRequest, CompletionResult};

/// Client for a completions-style HTTP endpoint.
///
/// Cloning shares the connection pool and the in-flight request bound.
#[derive(Clone)]
pub struct HttpBackend {
    cfg: BackendConfig,
    client: reqwest::Client,
    api_key: Option<String>,
    in_flight: Arc<Semaphore>,
    retries: Arc<AtomicU64>,
}

enum Attempt {
    Done(String, u64),
    Retry(String),
    RetryTimeout,
}

impl HttpBackend {
    pub fn new(cfg: BackendConfig) -> Result<Self, ClientError> {
        cfg.validate()?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            debug!(var = %cfg.api_key_env, "no API key in environment; sending unauthenticated requests");
        }
        Ok(HttpBackend {
            in_flight: Arc::new(Semaphore::new(cfg.max_concurrent)),
            cfg,
            client,
            api_key,
            retries: Arc::new(AtomicU64::new(0)),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    /// Total retries (backoff sleeps) performed by this client so far.
    pub fn retries_performed(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    async fn attempt(&self, body: &super::CompletionRequestBody) -> Result<Attempt, ClientError> {
        let _permit = self
            .in_flight
            .acquire()
            .await
            .map_err(|e| ClientError::Unavailable(e.to_string()))?;
        let started = Instant::now();
        let mut req = self.client.post(&self.cfg.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(resp) => resp,
            Err(e) if e.is_timeout() => return Ok(Attempt::RetryTimeout),
            Err(e) if e.is_connect() || e.is_request() => return Ok(Attempt::Retry(e.to_string())),
            Err(e) => return Err(ClientError::Unavailable(e.to_string())),
        };
        let status = resp.status();
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Ok(Attempt::RetryTimeout),
            Err(e) => return Ok(Attempt::Retry(e.to_string())),
        };
        let latency = started.elapsed().as_millis() as u64;
        if status.is_success() {
            Ok(Attempt::Done(text, latency))
        } else if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            Ok(Attempt::Retry(format!("HTTP {status}")))
        } else {
            Err(ClientError::Http {
                status: status.as_u16(),
                body: text,
            })
        }
    }
}

#[async_trait]
impl CompletionBackend for HttpBackend {
    async fn complete(&self, request: CompletionRequest<'_>) -> Result<Vec<CompletionResult>, ClientError> {
        request.params.validate()?;
        if request.params.top_k.is_some() && !self.cfg.kind.supports_top_k() {
            debug!("backend does not take top_k; omitting it");
        }
        let body = request_body(&self.cfg.model, request.prompt, request.params, self.cfg.kind);
        let attempts = self.cfg.max_retries + 1;
        let mut last_timeout = false;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.cfg.backoff_delay(attempt - 1);
                warn!(sequence = request.sequence, attempt, ?delay, reason = %last, "retrying completion request");
                self.retries.fetch_add(1, Ordering::Relaxed);
                tokio::time::sleep(delay).await;
            }
            match self.attempt(&body).await? {
                Attempt::Done(text, latency) => {
                    return parse_response(&text, request.prompt, request.params, latency);
                }
                Attempt::Retry(reason) => {
                    last_timeout = false;
                    last = reason;
                }
                Attempt::RetryTimeout => {
                    last_timeout = true;
                    last = "timeout".into();
                }
            }
        }
        if last_timeout {
            Err(ClientError::Timeout { attempts })
        } else {
            Err(ClientError::RetriesExhausted { attempts, last })
        }
    }

    fn describe(&self) -> String {
        format!("http:{}#{}", self.cfg.endpoint, self.cfg.model)
    }
}
