use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::Verdict;
use crate::contract::ReferenceFile;

pub const NO_VERDICT_REASON: &str = "no verdict marker";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// Everything one judge sees for one criterion.
#[derive(Debug, Clone, Copy)]
pub struct JudgeRequest<'a> {
    pub task_prompt: &'a str,
    pub submission: &'a str,
    pub criterion_instruction: &'a str,
    pub references: &'a [ReferenceFile],
}

const SYSTEM_PROMPT: &str = "\
You are one member of a five-judge evaluation jury. You grade a candidate \
submission against exactly one criterion and nothing else.

Read the task, the criterion and the submission. Decide whether the \
submission satisfies the criterion. Your decision is binary.

Output format:
VERDICT: PASS
or
VERDICT: FAIL

Put the verdict on a single line. You may follow it with a short rationale \
block that starts with `RATIONALE:`. Do not emit any other verdict line.";

/// Build the message sequence for one judge call. Deterministic.
pub fn build_judge_prompt(request: &JudgeRequest<'_>) -> Vec<ChatMessage> {
    let mut user = String::new();
    section(&mut user, "TASK", request.task_prompt);
    if !request.references.is_empty() {
        let mut refs = String::new();
        for r in request.references {
            let _ = write!(refs, "- {} [{}]", r.name, media_label(r));
            if let Some(path) = &r.path {
                let _ = write!(refs, " path={path}");
            }
            if let Some(hash) = r.content_hash() {
                let _ = write!(refs, " sha256={hash}");
            }
            refs.push('\n');
            if let Some(content) = &r.content {
                refs.push_str(content);
                refs.push('\n');
            }
        }
        section(&mut user, "REFERENCES", refs.trim_end());
    }
    section(&mut user, "CRITERION", request.criterion_instruction);
    section(&mut user, "SUBMISSION", request.submission);
    user.push_str("Grade the submission against the criterion. End with `VERDICT: PASS` or `VERDICT: FAIL`.");

    vec![
        ChatMessage { role: Role::System, content: SYSTEM_PROMPT.to_string() },
        ChatMessage { role: Role::User, content: user },
    ]
}

fn section(out: &mut String, label: &str, body: &str) {
    let _ = write!(out, "<<<{label}>>>\n{body}\n<<<END {label}>>>\n\n");
}

fn media_label(r: &ReferenceFile) -> &'static str {
    match r.kind {
        crate::contract::MediaKind::Image => "image",
        crate::contract::MediaKind::Document => "document",
        crate::contract::MediaKind::Text => "text",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedVerdict {
    pub verdict: Verdict,
    pub rationale: Option<String>,
}

fn verdict_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)verdict:[ \t*_`]*(pass|fail)\b").expect("valid regex"))
}

/// Extract the last `VERDICT: PASS|FAIL` marker. Total over all inputs.
pub fn parse_verdict(raw: &str) -> ParsedVerdict {
    let Some(caps) = verdict_marker().captures_iter(raw).last() else {
        return ParsedVerdict { verdict: Verdict::Unusable, rationale: Some(NO_VERDICT_REASON.to_string()) };
    };
    let whole = caps.get(0).expect("match");
    let verdict =
        if caps[1].eq_ignore_ascii_case("pass") { Verdict::Pass } else { Verdict::Fail };

    let before = raw[..whole.start()].trim();
    let after = raw[whole.end()..].trim_start_matches(['*', '_', '`']).trim();
    let after = strip_prefix_ci(after, "rationale:").map(str::trim).unwrap_or(after);
    let rationale = match (before.is_empty(), after.is_empty()) {
        (true, true) => None,
        (false, true) => Some(before.to_string()),
        (true, false) => Some(after.to_string()),
        (false, false) => Some(format!("{before}\n{after}")),
    };
    ParsedVerdict { verdict, rationale }
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}
