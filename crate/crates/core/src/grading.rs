//! Criterion grading, jury consensus and weighted task scores.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::contract::{Criterion, EvaluationContract, GraderType};
use crate::gateway::{
    build_judge_prompt, parse_verdict, GatewayError, JudgeCall, JudgeGateway, JudgeRequest, JuryPool, TelemetryRecord,
    Verdict, POOL_SIZE,
};

/// A pre-produced candidate answer for one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub task_id: String,
    pub solver_id: String,
    pub text: String,
    pub char_count: usize,
}

impl Submission {
    pub fn new(task_id: impl Into<String>, solver_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Submission { task_id: task_id.into(), solver_id: solver_id.into(), char_count: text.chars().count(), text }
    }

    /// Present with extractable text.
    pub fn has_text(&self) -> bool {
        !self.text.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVote {
    pub judge_id: String,
    pub verdict: Verdict,
    /// Verbatim, uncapped. Unusable votes always carry the reason here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub telemetry: TelemetryRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Fail,
}

impl Decision {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Decision::Pass
        } else {
            Decision::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Decision::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VotePattern {
    /// 5:0
    Unanimous,
    /// 4:1
    OneDissenter,
    /// 3:2
    Split,
    /// Fewer than five usable votes.
    Reduced,
    /// ExactMatch criteria.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion_id: String,
    pub grader_type: GraderType,
    pub weight: f64,
    pub decision: Decision,
    pub awarded_weight: f64,
    #[serde(default)]
    pub votes: Vec<JudgeVote>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted_answer: Option<String>,
    pub vote_pattern: VotePattern,
    /// Every vote was unusable; the criterion failed closed.
    #[serde(default)]
    pub panel_empty: bool,
}

impl CriterionResult {
    pub fn usable_votes(&self) -> usize {
        self.votes.iter().filter(|v| v.verdict.is_usable()).count()
    }

    pub fn verdicts(&self) -> Vec<Verdict> {
        self.votes.iter().map(|v| v.verdict).collect()
    }

    /// Sum of the per-call telemetry over this criterion's panel.
    pub fn pooled_telemetry(&self) -> PooledTelemetry {
        PooledTelemetry::from_votes(&self.votes)
    }
}

/// Telemetry summed over one panel's calls for one criterion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PooledTelemetry {
    pub cost_usd: f64,
    /// Sum of per-call wall times.
    pub latency_ms_sum: f64,
    /// Longest single call; the wall time when calls run concurrently.
    pub latency_ms_max: f64,
    pub output_tokens: u64,
    pub total_tokens: u64,
    pub calls: usize,
}

impl PooledTelemetry {
    pub fn from_votes(votes: &[JudgeVote]) -> Self {
        votes.iter().fold(PooledTelemetry::default(), |acc, v| PooledTelemetry {
            cost_usd: acc.cost_usd + v.telemetry.cost_usd,
            latency_ms_sum: acc.latency_ms_sum + v.telemetry.latency_ms,
            latency_ms_max: acc.latency_ms_max.max(v.telemetry.latency_ms),
            output_tokens: acc.output_tokens + v.telemetry.output_tokens,
            total_tokens: acc.total_tokens + v.telemetry.total_tokens(),
            calls: acc.calls + 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub solver_id: String,
    pub pool_id: String,
    pub score: f64,
    pub pass_threshold: f64,
    pub passed: bool,
    pub criterion_results: Vec<CriterionResult>,
}

impl TaskResult {
    pub fn criterion(&self, criterion_id: &str) -> Option<&CriterionResult> {
        self.criterion_results.iter().find(|c| c.criterion_id == criterion_id)
    }

    /// Criteria whose panel returned no usable vote.
    pub fn empty_panels(&self) -> impl Iterator<Item = &str> {
        self.criterion_results.iter().filter(|c| c.panel_empty).map(|c| c.criterion_id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GradingError {
    #[error("submission is for task `{submission}` but contract is `{contract}`")]
    TaskMismatch { contract: String, submission: String },
    #[error("judge gateway configuration fault: {0}")]
    Gateway(GatewayError),
}

fn answer_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*answer:\s*(.*?)\s*$").expect("valid regex"))
}

/// Terminal answer: the remainder of the last `ANSWER:` line, else the last
/// non-empty line.
pub fn extract_terminal_answer(text: &str) -> String {
    let marker = answer_marker();
    if let Some(caps) = text.lines().rev().find_map(|l| marker.captures(l)) {
        return caps[1].to_string();
    }
    text.lines().rev().map(str::trim).find(|l| !l.is_empty()).unwrap_or("").to_string()
}

/// Trim, collapse whitespace, lowercase, strip trailing `.`, `!`, `?`.
pub fn normalize_answer(answer: &str) -> String {
    let collapsed = answer.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed.trim_end_matches(['.', '!', '?']).trim_end().to_string()
}

pub fn grade_exact_match(criterion: &Criterion, submission: &Submission) -> CriterionResult {
    let extracted = extract_terminal_answer(&submission.text);
    let matched = normalize_answer(&extracted) == normalize_answer(&criterion.semantic_prompt);
    let decision = Decision::from_bool(matched);
    CriterionResult {
        criterion_id: criterion.criterion_id.clone(),
        grader_type: GraderType::ExactMatch,
        weight: criterion.weight,
        decision,
        awarded_weight: if matched { criterion.weight } else { 0.0 },
        votes: Vec::new(),
        extracted_answer: Some(extracted),
        vote_pattern: VotePattern::NotApplicable,
        panel_empty: false,
    }
}

fn tally(verdicts: impl IntoIterator<Item = Verdict>) -> (usize, usize) {
    verdicts.into_iter().fold((0, 0), |(p, f), v| match v {
        Verdict::Pass => (p + 1, f),
        Verdict::Fail => (p, f + 1),
        Verdict::Unusable => (p, f),
    })
}

/// Strict majority over usable verdicts; ties and empty panels fail.
pub fn jury_consensus(verdicts: impl IntoIterator<Item = Verdict>) -> Decision {
    let (pass, fail) = tally(verdicts);
    Decision::from_bool(2 * pass > pass + fail)
}

pub fn classify_vote_pattern(verdicts: impl IntoIterator<Item = Verdict>) -> VotePattern {
    let (pass, fail) = tally(verdicts);
    if pass + fail != POOL_SIZE {
        return VotePattern::Reduced;
    }
    match pass.abs_diff(fail) {
        5 => VotePattern::Unanimous,
        3 => VotePattern::OneDissenter,
        _ => VotePattern::Split,
    }
}

/// Assemble a jury criterion result from votes in pool order.
pub fn jury_result(criterion: &Criterion, votes: Vec<JudgeVote>) -> CriterionResult {
    let decision = jury_consensus(votes.iter().map(|v| v.verdict));
    let vote_pattern = classify_vote_pattern(votes.iter().map(|v| v.verdict));
    let panel_empty = !votes.iter().any(|v| v.verdict.is_usable());
    CriterionResult {
        criterion_id: criterion.criterion_id.clone(),
        grader_type: GraderType::LlmJudge,
        weight: criterion.weight,
        decision,
        awarded_weight: if decision.is_pass() { criterion.weight } else { 0.0 },
        votes,
        extracted_answer: None,
        vote_pattern,
        panel_empty,
    }
}

/// S = Σ awarded weights, summed in criterion order.
pub fn task_score(results: &[CriterionResult]) -> f64 {
    results.iter().map(|r| r.awarded_weight).sum()
}

/// Assemble a task result; `passed` is the inclusive `S ≥ τ`.
pub fn task_result(
    contract: &EvaluationContract,
    solver_id: &str,
    pool_id: &str,
    criterion_results: Vec<CriterionResult>,
) -> TaskResult {
    let score = task_score(&criterion_results);
    TaskResult {
        task_id: contract.task_id.clone(),
        solver_id: solver_id.to_string(),
        pool_id: pool_id.to_string(),
        score,
        pass_threshold: contract.pass_threshold,
        passed: score >= contract.pass_threshold,
        criterion_results,
    }
}

/// Grade one submission against one (normalized) contract.
///
/// Judge calls fan out over at most `concurrency` workers. The result is
/// independent of completion order: votes are keyed by position and emitted
/// in pool-declaration order. A failed call becomes an unusable vote;
/// only configuration faults abort.
pub fn grade_task(
    contract: &EvaluationContract,
    submission: &Submission,
    pool: &JuryPool,
    gateway: &JudgeGateway,
    concurrency: usize,
) -> Result<TaskResult, GradingError> {
    if submission.task_id != contract.task_id {
        return Err(GradingError::TaskMismatch {
            contract: contract.task_id.clone(),
            submission: submission.task_id.clone(),
        });
    }

    let jury: Vec<&Criterion> = contract.criteria.iter().filter(|c| c.grader_type == GraderType::LlmJudge).collect();
    let prompts: Vec<_> = jury
        .iter()
        .map(|c| {
            build_judge_prompt(&JudgeRequest {
                task_prompt: &contract.task_prompt,
                submission: &submission.text,
                criterion_instruction: &c.semantic_prompt,
                references: &contract.reference_files,
            })
        })
        .collect();

    let jobs: Vec<(usize, usize)> =
        (0..jury.len()).flat_map(|ci| (0..pool.judges.len()).map(move |ji| (ci, ji))).collect();
    let outcomes = run_bounded(jobs.len(), concurrency, |job| {
        let (ci, ji) = jobs[job];
        let call = JudgeCall {
            pool_id: &pool.pool_id,
            task_id: &contract.task_id,
            criterion_id: &jury[ci].criterion_id,
            judge_id: &pool.judges[ji],
            messages: &prompts[ci],
        };
        gateway.call_judge(&call).map(|reply| vote_from_reply(&pool.judges[ji], reply.raw, reply.telemetry)).or_else(
            |err| {
                if err.is_configuration_fault() {
                    Err(err)
                } else {
                    Ok(JudgeVote {
                        judge_id: pool.judges[ji].clone(),
                        verdict: Verdict::Unusable,
                        rationale: Some(format!("gateway error: {err}")),
                        telemetry: TelemetryRecord::default(),
                    })
                }
            },
        )
    });

    let mut per_criterion: Vec<Vec<JudgeVote>> = vec![Vec::with_capacity(pool.judges.len()); jury.len()];
    for (job, outcome) in outcomes.into_iter().enumerate() {
        let vote = outcome.map_err(GradingError::Gateway)?;
        per_criterion[jobs[job].0].push(vote);
    }

    let mut jury_votes = per_criterion.into_iter();
    let results = contract
        .criteria
        .iter()
        .map(|c| match c.grader_type {
            GraderType::ExactMatch => grade_exact_match(c, submission),
            GraderType::LlmJudge => jury_result(c, jury_votes.next().expect("one vote list per jury criterion")),
        })
        .collect();
    Ok(task_result(contract, &submission.solver_id, &pool.pool_id, results))
}

fn vote_from_reply(judge_id: &str, raw: String, telemetry: TelemetryRecord) -> JudgeVote {
    let parsed = parse_verdict(&raw);
    JudgeVote { judge_id: judge_id.to_string(), verdict: parsed.verdict, rationale: parsed.rationale, telemetry }
}

/// Run `n` indexed jobs over at most `workers` threads; results in index order.
pub(crate) fn run_bounded<T, F>(n: usize, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(&job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = job(i);
                slots.lock().expect("result slots")[i] = Some(out);
            });
        }
    });
    slots.into_inner().expect("result slots").into_iter().map(|s| s.expect("every job ran")).collect()
}
