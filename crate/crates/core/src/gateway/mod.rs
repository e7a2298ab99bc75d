//! Jury calls: prompt construction, verdict parsing, retries and telemetry.
//!
//! Backends implement [`JudgeBackend`], a single-attempt exchange. The
//! [`JudgeGateway`] wraps a backend with the retry contract and produces a
//! [`TelemetryRecord`] per call.

mod http;
mod prompt;
mod scripted;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use http::HttpBackend;
pub use prompt::{build_judge_prompt, parse_verdict, ChatMessage, JudgeRequest, ParsedVerdict, Role, NO_VERDICT_REASON};
pub use scripted::{ScriptEntry, ScriptResponse, ScriptedBackend, ScriptFile};

/// Number of judges in every jury pool.
pub const POOL_SIZE: usize = 5;

/// Default per-endpoint cap on in-flight requests.
pub const DEFAULT_MAX_IN_FLIGHT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unusable,
}

impl Verdict {
    pub fn is_usable(self) -> bool {
        !matches!(self, Verdict::Unusable)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unusable => "unusable",
        })
    }
}

/// Cost, latency and token accounting for one judge call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub cost_usd: f64,
    pub latency_ms: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Whether `cost_usd` came from provider metadata. Missing cost is
    /// recorded as 0, never estimated.
    pub provider_reported: bool,
}

impl TelemetryRecord {
    pub fn total_tokens(&self) -> u64 {
        self.input_tokens + self.output_tokens
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoolError {
    #[error("pool `{pool_id}` must declare exactly {POOL_SIZE} judges, found {found}")]
    WrongSize { pool_id: String, found: usize },
    #[error("pool `{pool_id}` lists judge `{judge_id}` more than once")]
    DuplicateJudge { pool_id: String, judge_id: String },
    #[error("pool id is empty")]
    EmptyId,
    #[error("duplicate pool id `{0}`")]
    DuplicatePool(String),
    #[error("cannot read pool config {path}: {message}")]
    Io { path: String, message: String },
}

/// A five-judge panel with its endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JuryPool {
    pub pool_id: String,
    pub judges: Vec<String>,
    #[serde(default)]
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    /// Extra request-body fields sent with every call (temperature etc.).
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub request_params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_in_flight: Option<usize>,
}

impl JuryPool {
    pub fn new(pool_id: impl Into<String>, judges: &[&str]) -> Result<Self, PoolError> {
        let pool = JuryPool {
            pool_id: pool_id.into(),
            judges: judges.iter().map(|s| s.to_string()).collect(),
            endpoint: String::new(),
            auth_env: None,
            request_params: Map::new(),
            max_in_flight: None,
        };
        pool.validate()?;
        Ok(pool)
    }

    pub fn validate(&self) -> Result<(), PoolError> {
        if self.pool_id.trim().is_empty() {
            return Err(PoolError::EmptyId);
        }
        if self.judges.len() != POOL_SIZE {
            return Err(PoolError::WrongSize { pool_id: self.pool_id.clone(), found: self.judges.len() });
        }
        let mut seen = HashSet::new();
        for j in &self.judges {
            if !seen.insert(j.as_str()) {
                return Err(PoolError::DuplicateJudge { pool_id: self.pool_id.clone(), judge_id: j.clone() });
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PoolError> {
        let io = |message: String| PoolError::Io { path: path.display().to_string(), message };
        let raw = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
        let pool: JuryPool = serde_json::from_str(&raw).map_err(|e| io(e.to_string()))?;
        pool.validate()?;
        Ok(pool)
    }
}

/// Check a set of pools for a single run.
pub fn validate_pools(pools: &[JuryPool]) -> Result<(), PoolError> {
    let mut seen = HashSet::new();
    for p in pools {
        p.validate()?;
        if !seen.insert(p.pool_id.as_str()) {
            return Err(PoolError::DuplicatePool(p.pool_id.clone()));
        }
    }
    Ok(())
}

/// One judge call as seen by a backend.
#[derive(Debug, Clone, Copy)]
pub struct JudgeCall<'a> {
    pub pool_id: &'a str,
    pub task_id: &'a str,
    pub criterion_id: &'a str,
    pub judge_id: &'a str,
    pub messages: &'a [ChatMessage],
}

/// Raw backend answer for a single attempt.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Completion {
    pub text: String,
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
    pub cost_usd: Option<f64>,
    /// Synthetic latency; when `None` the gateway uses measured wall time.
    pub latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    /// 429, 5xx, timeouts and connection failures.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("authentication failure: {0}")]
    Auth(String),
    /// Non-retryable protocol or client error.
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("no script entry for judge `{judge_id}` on criterion `{criterion_id}`")]
    MissingScriptEntry { judge_id: String, criterion_id: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("gave up after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error("authentication failure: {0}")]
    Auth(String),
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("no script entry for judge `{judge_id}` on criterion `{criterion_id}`")]
    MissingScriptEntry { judge_id: String, criterion_id: String },
}

impl GatewayError {
    /// Configuration faults abort a run; everything else degrades one vote.
    pub fn is_configuration_fault(&self) -> bool {
        matches!(self, GatewayError::Auth(_) | GatewayError::MissingScriptEntry { .. })
    }
}

/// A single-attempt chat-completion exchange.
pub trait JudgeBackend: Send + Sync {
    fn complete(&self, call: &JudgeCall<'_>) -> Result<Completion, TransportError>;
}

impl<B: JudgeBackend + ?Sized> JudgeBackend for Box<B> {
    fn complete(&self, call: &JudgeCall<'_>) -> Result<Completion, TransportError> {
        (**self).complete(call)
    }
}

impl<B: JudgeBackend + ?Sized> JudgeBackend for Arc<B> {
    fn complete(&self, call: &JudgeCall<'_>) -> Result<Completion, TransportError> {
        (**self).complete(call)
    }
}

/// Exponential backoff with jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
    /// Jitter as a fraction of the nominal delay, in `[0, 1]`. Keeping it at
    /// most 1 keeps successive delays non-decreasing.
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, base_delay: Duration::from_secs(1), factor: 2.0, jitter: 0.5 }
    }
}

impl RetryPolicy {
    /// No sleeping between attempts; for scripted runs.
    pub fn immediate() -> Self {
        RetryPolicy { base_delay: Duration::ZERO, jitter: 0.0, ..Self::default() }
    }

    /// Delay before retry number `retry` (1-based), with `unit` in `[0, 1)`.
    pub fn delay(&self, retry: u32, unit: f64) -> Duration {
        let nominal = self.base_delay.as_secs_f64() * self.factor.powi(retry.saturating_sub(1) as i32);
        let jitter = self.jitter.clamp(0.0, 1.0) * unit.clamp(0.0, 1.0);
        Duration::from_secs_f64(nominal * (1.0 + jitter))
    }
}

/// Successful judge call.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgeReply {
    pub raw: String,
    pub telemetry: TelemetryRecord,
    pub attempts: u32,
}

type Sleeper = dyn Fn(Duration) + Send + Sync;

/// A backend plus the retry contract.
pub struct JudgeGateway {
    backend: Box<dyn JudgeBackend>,
    retry: RetryPolicy,
    sleeper: Box<Sleeper>,
}

impl fmt::Debug for JudgeGateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JudgeGateway").field("retry", &self.retry).finish_non_exhaustive()
    }
}

impl JudgeGateway {
    pub fn new(backend: impl JudgeBackend + 'static) -> Self {
        JudgeGateway { backend: Box::new(backend), retry: RetryPolicy::default(), sleeper: Box::new(std::thread::sleep) }
    }

    /// Scripted backends never need real backoff.
    pub fn scripted(backend: ScriptedBackend) -> Self {
        Self::new(backend).with_retry(RetryPolicy::immediate())
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        self.retry
    }

    /// Issue one judge call, retrying transient failures.
    ///
    /// Latency is the wall time of the successful exchange unless the
    /// backend supplies a synthetic value.
    pub fn call_judge(&self, call: &JudgeCall<'_>) -> Result<JudgeReply, GatewayError> {
        let max_attempts = self.retry.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                let unit: f64 = rand::random();
                (self.sleeper)(self.retry.delay(attempt - 1, unit));
            }
            let started = Instant::now();
            match self.backend.complete(call) {
                Ok(completion) => {
                    let measured = started.elapsed().as_secs_f64() * 1000.0;
                    let telemetry = TelemetryRecord {
                        cost_usd: completion.cost_usd.unwrap_or(0.0).max(0.0),
                        latency_ms: completion.latency_ms.unwrap_or(measured).max(0.0),
                        input_tokens: completion.input_tokens.unwrap_or(0),
                        output_tokens: completion.output_tokens.unwrap_or(0),
                        provider_reported: completion.cost_usd.is_some(),
                    };
                    return Ok(JudgeReply { raw: completion.text, telemetry, attempts: attempt });
                }
                Err(TransportError::Transient(msg)) => last = msg,
                Err(TransportError::Auth(msg)) => return Err(GatewayError::Auth(msg)),
                Err(TransportError::Rejected(msg)) => return Err(GatewayError::Rejected(msg)),
                Err(TransportError::MissingScriptEntry { judge_id, criterion_id }) => {
                    return Err(GatewayError::MissingScriptEntry { judge_id, criterion_id })
                }
            }
        }
        Err(GatewayError::ExhaustedRetries { attempts: max_attempts, last })
    }
}
