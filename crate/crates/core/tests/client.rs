mod common;

use std::time::{Duration, Instant};

use common::fake_server::{choices, FakeServer, Reply};
use ideaforge::corpus::TaskKind;
use ideaforge::llmclient::{BackendConfig, ClientError, CompletionBackend, CompletionRequest, FinishReason, HttpBackend};
use ideaforge::promptgen::{default_params, BackendKind, GenerationParams};
use serde_json::json;

const PROMPT: &str = "KEYWORD: toy\nTITLE:";

fn config(url: &str) -> BackendConfig {
    BackendConfig {
        endpoint: url.to_owned(),
        backoff_base_ms: 2,
        backoff_max_ms: 10,
        max_retries: 2,
        timeout_secs: 5.0,
        max_concurrent: 2,
        ..BackendConfig::default()
    }
}

fn params() -> GenerationParams {
    default_params(TaskKind::DomainSynthesis, BackendKind::FineTuned)
}

async fn call(backend: &HttpBackend, params: &GenerationParams) -> Result<Vec<ideaforge::llmclient::CompletionResult>, ClientError> {
    backend.complete(CompletionRequest { prompt: PROMPT, params, sequence: 3 }).await
}

#[tokio::test]
async fn persistent_5xx_exhausts_retries() {
    let server = FakeServer::start(Duration::ZERO, |_, _| Reply::Status(503)).await;
    let backend = HttpBackend::new(config(&server.url)).unwrap();
    match call(&backend, &params()).await {
        Err(ClientError::RetriesExhausted { attempts: 3, last }) => assert!(last.contains("503"), "{last}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(server.requests(), 3);
    assert_eq!(backend.retries_performed(), 2);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let server = FakeServer::start(Duration::ZERO, |_, _| Reply::Raw(400, "bad prompt".into())).await;
    let backend = HttpBackend::new(config(&server.url)).unwrap();
    match call(&backend, &params()).await {
        Err(ClientError::Http { status: 400, body }) => assert_eq!(body, "bad prompt"),
        other => panic!("{other:?}"),
    }
    assert_eq!(server.requests(), 1);
}

#[tokio::test]
async fn malformed_bodies_are_reported() {
    let server = FakeServer::start(Duration::ZERO, |i, _| match i {
        0 => Reply::Raw(200, "not json".into()),
        _ => Reply::Json(choices(&[" a", " b"])),
    })
    .await;
    let backend = HttpBackend::new(config(&server.url)).unwrap();
    assert!(matches!(call(&backend, &params()).await, Err(ClientError::MalformedResponse(_))));
    // two choices for a one-sample request
    assert!(matches!(call(&backend, &params()).await, Err(ClientError::MalformedResponse(_))));
}

#[tokio::test]
async fn hanging_server_times_out_after_all_attempts() {
    let server = FakeServer::start(Duration::ZERO, |_, _| Reply::Hang).await;
    let cfg = BackendConfig { timeout_secs: 0.2, max_retries: 1, ..config(&server.url) };
    let backend = HttpBackend::new(cfg).unwrap();
    let started = Instant::now();
    assert!(matches!(call(&backend, &params()).await, Err(ClientError::Timeout { attempts: 2 })));
    assert!(started.elapsed() < Duration::from_secs(3));
    assert_eq!(server.requests(), 2);
}

#[tokio::test]
async fn unreachable_endpoint_is_retried_then_reported() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/completions", listener.local_addr().unwrap());
    drop(listener);
    let backend = HttpBackend::new(config(&url)).unwrap();
    assert!(matches!(call(&backend, &params()).await, Err(ClientError::RetriesExhausted { attempts: 3, .. })));
}

#[tokio::test]
async fn request_body_and_choice_order() {
    let server = FakeServer::start(Duration::ZERO, |_, _| {
        Reply::Json(json!({"choices": [
            {"text": " second", "index": 1, "finish_reason": "length"},
            {"text": " first\nKEYWORD: x", "index": 0, "finish_reason": "stop"},
        ]}))
    })
    .await;
    let backend = HttpBackend::new(BackendConfig { model: "concepts-ft".into(), ..config(&server.url) }).unwrap();
    let p = GenerationParams { samples_per_request: 2, ..params() };
    let out = call(&backend, &p).await.unwrap();
    assert_eq!(out[0].text, " first");
    assert_eq!(out[0].finish_reason, FinishReason::Stop);
    assert_eq!(out[1].text, " second");
    assert_eq!(out[1].finish_reason, FinishReason::Length);

    let body = &server.bodies()[0];
    assert_eq!(body["model"], "concepts-ft");
    assert_eq!(body["prompt"], PROMPT);
    assert_eq!(body["n"], 2);
    assert_eq!(body["top_k"], 50);
    assert!(body.as_object().unwrap().values().all(|v| !v.is_null()));
}

#[tokio::test]
async fn few_shot_backend_never_sends_top_k() {
    let server = FakeServer::start(Duration::ZERO, |_, _| Reply::Json(choices(&[" x"]))).await;
    let backend = HttpBackend::new(BackendConfig { kind: BackendKind::FewShot, ..config(&server.url) }).unwrap();
    let p = GenerationParams { top_k: Some(40), ..default_params(TaskKind::DomainSynthesis, BackendKind::FewShot) };
    call(&backend, &p).await.unwrap();
    let body = &server.bodies()[0];
    assert!(body.get("top_k").is_none(), "{body}");
    assert!(body.get("presence_penalty").is_some());
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        BackendConfig { max_concurrent: 0, ..BackendConfig::default() },
        BackendConfig { timeout_secs: 0.0, ..BackendConfig::default() },
        BackendConfig { endpoint: " ".into(), ..BackendConfig::default() },
    ] {
        assert!(matches!(HttpBackend::new(cfg), Err(ClientError::Config(_))));
    }
}
