use std::sync::{Condvar, Mutex};
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Map, Value};

use super::{Completion, JudgeBackend, JudgeCall, JuryPool, TransportError, DEFAULT_MAX_IN_FLIGHT};

/// OpenAI-compatible chat-completion backend for one pool endpoint.
#[derive(Debug)]
pub struct HttpBackend {
    client: Client,
    url: String,
    token: Option<String>,
    request_params: Map<String, Value>,
    slots: Slots,
}

impl HttpBackend {
    /// Resolve the pool's credential and build a client.
    ///
    /// A credential variable named in the pool but absent from the
    /// environment is an authentication fault.
    pub fn from_pool(pool: &JuryPool) -> Result<Self, TransportError> {
        let token = match &pool.auth_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| TransportError::Auth(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        if pool.endpoint.trim().is_empty() {
            return Err(TransportError::Rejected(format!("pool `{}` has no endpoint", pool.pool_id)));
        }
        Self::new(&pool.endpoint, token, pool.request_params.clone(), pool.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT))
    }

    pub fn new(
        endpoint: &str,
        token: Option<String>,
        request_params: Map<String, Value>,
        max_in_flight: usize,
    ) -> Result<Self, TransportError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| TransportError::Rejected(e.to_string()))?;
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") { base.to_string() } else { format!("{base}/chat/completions") };
        Ok(HttpBackend { client, url, token, request_params, slots: Slots::new(max_in_flight.max(1)) })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn body(&self, call: &JudgeCall<'_>) -> Value {
        let mut body = Map::new();
        for (k, v) in &self.request_params {
            body.insert(k.clone(), v.clone());
        }
        body.insert("model".into(), Value::String(call.judge_id.to_string()));
        body.insert("messages".into(), json!(call.messages));
        Value::Object(body)
    }
}

impl JudgeBackend for HttpBackend {
    fn complete(&self, call: &JudgeCall<'_>) -> Result<Completion, TransportError> {
        let _slot = self.slots.acquire();
        let mut request = self.client.post(&self.url).json(&self.body(call));
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = response.status();
        let text = response.text().map_err(|e| TransportError::Transient(e.to_string()))?;
        classify_status(status, &text)?;
        parse_completion(&text)
    }
}

fn classify_status(status: StatusCode, body: &str) -> Result<(), TransportError> {
    if status.is_success() {
        return Ok(());
    }
    let summary = format!("HTTP {}: {}", status.as_u16(), body.chars().take(200).collect::<String>());
    Err(match status {
        StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => TransportError::Auth(summary),
        StatusCode::TOO_MANY_REQUESTS | StatusCode::REQUEST_TIMEOUT => TransportError::Transient(summary),
        s if s.is_server_error() => TransportError::Transient(summary),
        _ => TransportError::Rejected(summary),
    })
}

/// Read `choices[0].message.content` and optional `usage` metadata.
pub(crate) fn parse_completion(body: &str) -> Result<Completion, TransportError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| TransportError::Rejected(format!("response is not JSON: {e}")))?;
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .or_else(|| value.pointer("/choices/0/text").and_then(Value::as_str))
        .ok_or_else(|| TransportError::Rejected("response has no choices[0] content".into()))?
        .to_string();
    let usage = value.get("usage");
    let field = |name: &str| usage.and_then(|u| u.get(name));
    Ok(Completion {
        text,
        input_tokens: field("prompt_tokens").and_then(Value::as_u64),
        output_tokens: field("completion_tokens").and_then(Value::as_u64),
        cost_usd: field("cost").and_then(Value::as_f64),
        latency_ms: None,
    })
}

#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    ready: Condvar,
}

struct SlotGuard<'a>(&'a Slots);

impl Slots {
    fn new(n: usize) -> Self {
        Slots { free: Mutex::new(n), ready: Condvar::new() }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.ready.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.ready.notify_one();
    }
}
