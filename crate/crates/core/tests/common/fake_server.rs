//! Scripted completions endpoint for client tests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

pub enum Reply {
    Json(Value),
    Status(u16),
    Raw(u16, String),
    /// Never answer within any sane client timeout.
    Hang,
}

type Script = Box<dyn FnMut(usize, &Value) -> Reply + Send>;

pub struct ServerState {
    pub requests: AtomicUsize,
    in_flight: AtomicUsize,
    pub peak: AtomicUsize,
    pub bodies: Mutex<Vec<Value>>,
    delay: Duration,
    script: Mutex<Script>,
}

pub struct FakeServer {
    pub url: String,
    pub state: Arc<ServerState>,
}

impl FakeServer {
    /// Serve `script(request_index, body)` on a random local port; every
    /// request is held for `delay` before the reply is computed.
    pub async fn start(delay: Duration, script: impl FnMut(usize, &Value) -> Reply + Send + 'static) -> Self {
        let state = Arc::new(ServerState {
            requests: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            bodies: Mutex::new(Vec::new()),
            delay,
            script: Mutex::new(Box::new(script)),
        });
        let app = Router::new()
            .route("/v1/completions", post(handle))
            .with_state(state.clone());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        FakeServer {
            url: format!("http://{addr}/v1/completions"),
            state,
        }
    }

    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.state.peak.load(Ordering::SeqCst)
    }

    pub fn bodies(&self) -> Vec<Value> {
        self.state.bodies.lock().unwrap().clone()
    }
}

/// A well-formed completions response.
pub fn choices(texts: &[&str]) -> Value {
    json!({
        "choices": texts
            .iter()
            .enumerate()
            .map(|(i, t)| json!({"text": t, "index": i, "finish_reason": "stop"}))
            .collect::<Vec<_>>()
    })
}

async fn handle(State(state): State<Arc<ServerState>>, Json(body): Json<Value>) -> Response {
    let index = state.requests.fetch_add(1, Ordering::SeqCst);
    let now = state.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    state.peak.fetch_max(now, Ordering::SeqCst);
    tokio::time::sleep(state.delay).await;
    state.bodies.lock().unwrap().push(body.clone());
    let reply = (state.script.lock().unwrap())(index, &body);
    let response = match reply {
        Reply::Json(v) => Json(v).into_response(),
        Reply::Status(code) => (StatusCode::from_u16(code).unwrap(), "scripted failure").into_response(),
        Reply::Raw(code, text) => (StatusCode::from_u16(code).unwrap(), text).into_response(),
        Reply::Hang => {
            tokio::time::sleep(Duration::from_secs(3600)).await;
            StatusCode::GATEWAY_TIMEOUT.into_response()
        }
    };
    state.in_flight.fetch_sub(1, Ordering::SeqCst);
    response
}
