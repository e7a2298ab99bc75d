use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Completion, JudgeBackend, JudgeCall, TransportError};

/// A canned judge answer plus its synthetic telemetry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptResponse {
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_usd: Option<f64>,
    #[serde(default)]
    pub latency_ms: f64,
    #[serde(default)]
    pub input_tokens: u64,
    #[serde(default)]
    pub output_tokens: u64,
    /// Transient failures to emit before the first success for this key.
    #[serde(default)]
    pub transient_failures: u32,
}

impl ScriptResponse {
    pub fn text(response: impl Into<String>) -> Self {
        ScriptResponse { response: response.into(), ..Default::default() }
    }
}

/// One script line. `task_id` and `pool_id` narrow the match when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub judge_id: String,
    pub criterion_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_id: Option<String>,
    #[serde(flatten)]
    pub reply: ScriptResponse,
}

/// On-disk script document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<ScriptResponse>,
    #[serde(default)]
    pub entries: Vec<ScriptEntry>,
}

impl ScriptFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let raw = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&raw).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Deterministic offline judge backend.
///
/// Lookups are keyed by `(judge_id, criterion_id)`; among matching entries
/// the most specific one (task and pool constraints) wins.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    entries: HashMap<(String, String), Vec<ScriptEntry>>,
    default: Option<ScriptResponse>,
    attempts: Mutex<HashMap<String, u32>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(script: ScriptFile) -> Self {
        let mut backend = ScriptedBackend { default: script.default, ..Default::default() };
        for e in script.entries {
            backend.insert(e);
        }
        backend
    }

    pub fn with_default(mut self, reply: ScriptResponse) -> Self {
        self.default = Some(reply);
        self
    }

    pub fn with_entry(mut self, judge_id: &str, criterion_id: &str, reply: ScriptResponse) -> Self {
        self.insert(ScriptEntry {
            judge_id: judge_id.into(),
            criterion_id: criterion_id.into(),
            task_id: None,
            pool_id: None,
            reply,
        });
        self
    }

    pub fn insert(&mut self, entry: ScriptEntry) {
        self.entries.entry((entry.judge_id.clone(), entry.criterion_id.clone())).or_default().push(entry);
    }

    fn lookup(&self, call: &JudgeCall<'_>) -> Option<&ScriptResponse> {
        let key = (call.judge_id.to_string(), call.criterion_id.to_string());
        let best = self
            .entries
            .get(&key)
            .into_iter()
            .flatten()
            .filter(|e| e.task_id.as_deref().is_none_or(|t| t == call.task_id))
            .filter(|e| e.pool_id.as_deref().is_none_or(|p| p == call.pool_id))
            .max_by_key(|e| (e.task_id.is_some() as u8) * 2 + e.pool_id.is_some() as u8);
        best.map(|e| &e.reply).or(self.default.as_ref())
    }
}

impl JudgeBackend for ScriptedBackend {
    fn complete(&self, call: &JudgeCall<'_>) -> Result<Completion, TransportError> {
        let reply = self.lookup(call).ok_or_else(|| TransportError::MissingScriptEntry {
            judge_id: call.judge_id.to_string(),
            criterion_id: call.criterion_id.to_string(),
        })?;
        if reply.transient_failures > 0 {
            let key = format!("{}\u{1f}{}\u{1f}{}\u{1f}{}", call.pool_id, call.task_id, call.criterion_id, call.judge_id);
            let mut attempts = self.attempts.lock().expect("attempt counter");
            let seen = attempts.entry(key).or_insert(0);
            *seen += 1;
            if *seen <= reply.transient_failures {
                return Err(TransportError::Transient(format!("scripted failure {}", *seen)));
            }
        }
        Ok(Completion {
            text: reply.response.clone(),
            input_tokens: Some(reply.input_tokens),
            output_tokens: Some(reply.output_tokens),
            cost_usd: reply.cost_usd,
            latency_ms: Some(reply.latency_ms),
        })
    }
}
