//! Synthetic generators and brute-force reference implementations shared by
//! the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use evalcontract::contract::{Criterion, EvaluationContract, GraderType, MediaKind, ReferenceFile};
use evalcontract::gateway::{JuryPool, ScriptEntry, ScriptFile, ScriptResponse, TelemetryRecord, Verdict};
use evalcontract::grading::{jury_result, task_result, CriterionResult, JudgeVote, Submission, TaskResult, VotePattern};
use evalcontract::trace::{RunTrace, TaskFlags, TaskTrace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const FRONTIER: [&str; 5] = ["deepseek-v3.2", "glm-5", "gpt-oss-120b", "llama-3.3-70b-instruct", "kimi-k2.5"];
pub const COMPACT: [&str; 5] =
    ["gemma-3-4b-it", "llama-3.1-8b-instruct", "olmo-3-7b-instruct", "qwen3-8b", "ministral-8b-2512"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn frontier_pool() -> JuryPool {
    JuryPool::new("frontier", &FRONTIER).unwrap()
}

pub fn compact_pool() -> JuryPool {
    JuryPool::new("compact", &COMPACT).unwrap()
}

pub fn fixtures() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

// ---------------------------------------------------------------- oracles

/// Pass iff passes outnumber fails among usable votes.
pub fn brute_majority(votes: &[Verdict]) -> bool {
    let mut passes = 0;
    let mut fails = 0;
    for v in votes {
        match v {
            Verdict::Pass => passes += 1,
            Verdict::Fail => fails += 1,
            Verdict::Unusable => {}
        }
    }
    passes > fails
}

pub fn brute_pattern(votes: &[Verdict]) -> VotePattern {
    if votes.len() != 5 || votes.contains(&Verdict::Unusable) {
        return VotePattern::Reduced;
    }
    match votes.iter().filter(|v| **v == Verdict::Pass).count() {
        0 | 5 => VotePattern::Unanimous,
        1 | 4 => VotePattern::OneDissenter,
        _ => VotePattern::Split,
    }
}

/// Σ wᵢ over criteria whose raw votes carry a majority (stored decision for
/// exact-match), summed in criterion order.
pub fn brute_score(result: &TaskResult) -> f64 {
    let mut s = 0.0;
    for c in &result.criterion_results {
        let pass = match c.grader_type {
            GraderType::LlmJudge => brute_majority(&c.votes.iter().map(|v| v.verdict).collect::<Vec<_>>()),
            GraderType::ExactMatch => c.decision.is_pass(),
        };
        if pass {
            s += c.weight;
        }
    }
    s
}

pub fn naive_mean(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s / v.len() as f64
}

// ------------------------------------------------------------- generators

fn word(rng: &mut ChaCha8Rng) -> String {
    const SYL: [&str; 12] = ["ka", "lo", "mi", "zu", "re", "ta", "no", "vi", "se", "ph", "ß", "ü"];
    (0..rng.random_range(1..4)).map(|_| SYL[rng.random_range(0..SYL.len())]).collect()
}

fn sentence(rng: &mut ChaCha8Rng, words: usize) -> String {
    (0..words).map(|_| word(rng)).collect::<Vec<_>>().join(" ")
}

/// Random contract with at most one exact-match criterion.
pub fn random_contract(rng: &mut ChaCha8Rng, task_id: &str) -> EvaluationContract {
    let n = rng.random_range(1..=8);
    let exact_at = if rng.random_bool(0.6) { Some(rng.random_range(0..n)) } else { None };
    let mut criteria: Vec<Criterion> = (0..n)
        .map(|i| Criterion {
            criterion_id: format!("{task_id}.c{i}"),
            grader_type: if Some(i) == exact_at { GraderType::ExactMatch } else { GraderType::LlmJudge },
            semantic_prompt: if Some(i) == exact_at { word(rng) } else { sentence(rng, 6) },
            weight: if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.01..50.0) },
        })
        .collect();
    if criteria.iter().all(|c| c.weight == 0.0) {
        criteria[0].weight = 1.0;
    }
    EvaluationContract {
        task_id: task_id.to_string(),
        task_prompt: sentence(rng, 12),
        reference_files: vec![],
        criteria,
        pass_threshold: rng.random_range(0.0..=100.0),
        metadata: BTreeMap::new(),
    }
}

pub fn random_verdict(rng: &mut ChaCha8Rng, unusable_rate: f64) -> Verdict {
    if rng.random_bool(unusable_rate) {
        Verdict::Unusable
    } else if rng.random_bool(0.5) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn verdict_text(rng: &mut ChaCha8Rng, v: Verdict) -> String {
    match v {
        Verdict::Pass => format!("RATIONALE: {}\nVERDICT: PASS", sentence(rng, 5)),
        Verdict::Fail => format!("{}. **Verdict:** fail", sentence(rng, 4)),
        Verdict::Unusable => format!("{} (no decision)", sentence(rng, 3)),
    }
}

pub struct SyntheticBundle {
    pub contracts: Vec<EvaluationContract>,
    pub submissions: BTreeMap<String, Submission>,
    pub script: ScriptFile,
}

/// Contracts, submissions and a script covering every (pool, judge,
/// criterion) call, with a few unparseable replies and transient failures.
pub fn synthetic_bundle(rng: &mut ChaCha8Rng, n_tasks: usize, pools: &[&JuryPool]) -> SyntheticBundle {
    let mut contracts = Vec::new();
    let mut submissions = BTreeMap::new();
    let mut entries = Vec::new();
    for t in 0..n_tasks {
        let task_id = format!("task_{t:03}");
        let contract = random_contract(rng, &task_id).normalized().unwrap();
        let answer = match contract.criteria.iter().find(|c| c.grader_type == GraderType::ExactMatch) {
            Some(c) if rng.random_bool(0.5) => c.semantic_prompt.to_uppercase(),
            _ => "something else".to_string(),
        };
        let text = format!("{}\nAnswer: {answer}.\n", sentence(rng, 20));
        submissions.insert(task_id.clone(), Submission::new(&task_id, "solver", text));
        for pool in pools {
            for c in contract.criteria.iter().filter(|c| c.grader_type == GraderType::LlmJudge) {
                for judge in &pool.judges {
                    let v = random_verdict(rng, 0.05);
                    entries.push(ScriptEntry {
                        judge_id: judge.clone(),
                        criterion_id: c.criterion_id.clone(),
                        task_id: Some(task_id.clone()),
                        pool_id: Some(pool.pool_id.clone()),
                        reply: ScriptResponse {
                            response: verdict_text(rng, v),
                            cost_usd: rng.random_bool(0.8).then(|| rng.random_range(0.0..0.02)),
                            latency_ms: rng.random_range(5.0..500.0),
                            input_tokens: rng.random_range(50..2000),
                            output_tokens: rng.random_range(1..200),
                            transient_failures: if rng.random_bool(0.05) { rng.random_range(1..=3) } else { 0 },
                        },
                    });
                }
            }
        }
        contracts.push(contract);
    }
    SyntheticBundle { contracts, submissions, script: ScriptFile { default: None, entries } }
}

fn random_telemetry(rng: &mut ChaCha8Rng) -> TelemetryRecord {
    let reported = rng.random_bool(0.7);
    TelemetryRecord {
        cost_usd: if reported { rng.random::<f64>() * 0.05 } else { 0.0 },
        latency_ms: rng.random::<f64>() * 3000.0,
        input_tokens: rng.random_range(0..10_000),
        output_tokens: rng.random_range(0..2_000),
        provider_reported: reported,
    }
}

fn random_vote(rng: &mut ChaCha8Rng, judge: &str) -> JudgeVote {
    let verdict = random_verdict(rng, 0.1);
    JudgeVote {
        judge_id: judge.to_string(),
        verdict,
        rationale: if rng.random_bool(0.2) { None } else { Some(format!("{} \"quoted\"\n\ttab ✓", sentence(rng, 8))) },
        telemetry: random_telemetry(rng),
    }
}

/// Grade a contract from explicit per-criterion vote lists.
pub fn result_from_votes(
    contract: &EvaluationContract,
    submission: &Submission,
    pool_id: &str,
    mut jury_votes: impl FnMut(&Criterion) -> Vec<JudgeVote>,
) -> TaskResult {
    let results: Vec<CriterionResult> = contract
        .criteria
        .iter()
        .map(|c| match c.grader_type {
            GraderType::ExactMatch => evalcontract::grading::grade_exact_match(c, submission),
            GraderType::LlmJudge => jury_result(c, jury_votes(c)),
        })
        .collect();
    task_result(contract, &submission.solver_id, pool_id, results)
}

fn random_json(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    match rng.random_range(0..if depth == 0 { 4 } else { 6 }) {
        0 => Value::Null,
        1 => json!(rng.random_bool(0.5)),
        2 => json!(rng.random::<f64>() * 1e6 - 5e5),
        3 => json!(sentence(rng, 3)),
        4 => Value::Array((0..rng.random_range(0..3)).map(|_| random_json(rng, depth - 1)).collect()),
        _ => {
            let mut m = serde_json::Map::new();
            for i in 0..rng.random_range(0..3) {
                m.insert(format!("k{i}"), random_json(rng, depth - 1));
            }
            Value::Object(m)
        }
    }
}

/// Random RunTrace exercising every persisted field.
pub fn random_run_trace(rng: &mut ChaCha8Rng, run_id: &str) -> RunTrace {
    let two_pools = rng.random_bool(0.7);
    let pools = if two_pools { vec![frontier_pool(), compact_pool()] } else { vec![frontier_pool()] };
    let mut tasks = Vec::new();
    for t in 0..rng.random_range(1..6) {
        let task_id = format!("t{t}-{}", word(rng));
        let mut contract = random_contract(rng, &task_id).normalized().unwrap();
        if rng.random_bool(0.3) {
            contract.reference_files.push(ReferenceFile {
                name: "ref.md".into(),
                kind: MediaKind::Document,
                path: None,
                content: Some(sentence(rng, 10)),
                sha256: None,
            });
        }
        if rng.random_bool(0.5) {
            contract.metadata.insert("author".into(), json!(word(rng)));
        }
        let mut flags = TaskFlags::default();
        let submission = if rng.random_bool(0.1) {
            flags.missing_submission = true;
            None
        } else {
            Some(Submission::new(&task_id, "solver-x", format!("{}\nAnswer: {}", sentence(rng, 15), word(rng))))
        };
        let mut results = BTreeMap::new();
        if let Some(sub) = &submission {
            if rng.random_bool(0.1) {
                flags.verifier_error = Some(format!("boom: {}", word(rng)));
            } else {
                for pool in &pools {
                    let r = result_from_votes(&contract, sub, &pool.pool_id, |_| {
                        pool.judges.iter().map(|j| random_vote(rng, j)).collect()
                    });
                    results.insert(pool.pool_id.clone(), r);
                }
            }
        }
        let mut extra = BTreeMap::new();
        if rng.random_bool(0.3) {
            extra.insert("x_annotation".into(), random_json(rng, 2));
        }
        tasks.push(TaskTrace { task_id, contract, submission, flags, results, extra });
    }
    let mut extra = BTreeMap::new();
    if rng.random_bool(0.5) {
        extra.insert("x_harness".into(), random_json(rng, 3));
    }
    RunTrace {
        run_id: run_id.to_string(),
        solver_id: "solver-x".into(),
        grading_pool: "frontier".into(),
        pools,
        tasks,
        extra,
    }
}

// ----------------------------------------------- ordinal synthetic dataset

#[derive(Debug, Clone)]
pub struct OrdinalTruth {
    pub alpha: f64,
    pub beta_length: f64,
    pub beta_compact: f64,
    pub beta_interaction: f64,
    pub cutpoints: [f64; 2],
    pub run_effects: BTreeMap<String, f64>,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn panel_for_severity(rng: &mut ChaCha8Rng, d: u8) -> Vec<Verdict> {
    let minority = match d {
        0 => 0,
        1 => 1,
        _ => 2,
    };
    let (maj, min) = if rng.random_bool(0.5) { (Verdict::Pass, Verdict::Fail) } else { (Verdict::Fail, Verdict::Pass) };
    let mut v: Vec<Verdict> = (0..5).map(|i| if i < minority { min } else { maj }).collect();
    v.shuffle(rng);
    v
}

fn votes_for(judges: &[&str], verdicts: &[Verdict]) -> Vec<JudgeVote> {
    judges
        .iter()
        .zip(verdicts)
        .map(|(j, v)| JudgeVote {
            judge_id: j.to_string(),
            verdict: *v,
            rationale: None,
            telemetry: TelemetryRecord::default(),
        })
        .collect()
}

/// One generated comparable instance as the generator saw it.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub run_id: String,
    pub task_id: String,
    pub criterion_id: String,
    pub chars: usize,
    pub length: f64,
    pub severity: [u8; 2],
}

/// Runs whose clean comparable instances number `clean_per_run`, with
/// severities drawn from `truth`. When `noise` is set each run also holds
/// instances that the comparable-row filter must drop.
pub fn ordinal_traces(
    rng: &mut ChaCha8Rng,
    truth: &OrdinalTruth,
    clean_per_run: &[(&str, usize)],
    noise: bool,
) -> (Vec<RunTrace>, Vec<GeneratedInstance>) {
    // lay out instances first so L can be standardized over all of them
    let mut layout: Vec<(String, String, Vec<String>, usize)> = Vec::new(); // run, task, criteria, chars
    for (run, n) in clean_per_run {
        let mut remaining = *n;
        let mut t = 0;
        while remaining > 0 {
            let k = rng.random_range(1..=3).min(remaining);
            let chars = (rng.random_range(5.0f64..9.0)).exp().round() as usize;
            let criteria = (0..k).map(|i| format!("c{i}")).collect();
            layout.push((run.to_string(), format!("task_{t:04}"), criteria, chars));
            remaining -= k;
            t += 1;
        }
    }
    let logs: Vec<f64> =
        layout.iter().flat_map(|(_, _, cs, chars)| cs.iter().map(move |_| (*chars as f64 + 1.0).ln())).collect();
    let mean = naive_mean(&logs);
    let sd = (logs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (logs.len() as f64 - 1.0)).sqrt();

    let draw = |rng: &mut ChaCha8Rng, eta: f64| -> u8 {
        let le0 = logistic(truth.cutpoints[0] - eta);
        let le1 = logistic(truth.cutpoints[1] - eta);
        let u: f64 = rng.random();
        if u < le0 {
            0
        } else if u < le1 {
            1
        } else {
            2
        }
    };

    let mut generated = Vec::new();
    let mut by_run: BTreeMap<String, Vec<TaskTrace>> = BTreeMap::new();
    for (run, task_id, criteria, chars) in &layout {
        let l = ((*chars as f64 + 1.0).ln() - mean) / sd;
        let contract = EvaluationContract {
            task_id: task_id.clone(),
            task_prompt: "synthetic".into(),
            reference_files: vec![],
            criteria: criteria
                .iter()
                .map(|c| Criterion {
                    criterion_id: c.clone(),
                    grader_type: GraderType::LlmJudge,
                    semantic_prompt: "judge".into(),
                    weight: 100.0 / criteria.len() as f64,
                })
                .collect(),
            pass_threshold: 50.0,
            metadata: BTreeMap::new(),
        };
        let submission = Submission::new(task_id, "solver", "x".repeat(*chars));
        let gamma = truth.run_effects.get(run).copied().unwrap_or(0.0);
        let mut panels: BTreeMap<String, [Vec<Verdict>; 2]> = BTreeMap::new();
        for c in criteria {
            let mut sev = [0u8; 2];
            let mut verdicts: [Vec<Verdict>; 2] = [vec![], vec![]];
            for (p, compact) in [(0usize, 0.0), (1, 1.0)] {
                let eta = truth.alpha
                    + truth.beta_length * l
                    + truth.beta_compact * compact
                    + truth.beta_interaction * l * compact
                    + gamma;
                sev[p] = draw(rng, eta);
                verdicts[p] = panel_for_severity(rng, sev[p]);
            }
            generated.push(GeneratedInstance {
                run_id: run.clone(),
                task_id: task_id.clone(),
                criterion_id: c.clone(),
                chars: *chars,
                length: l,
                severity: sev,
            });
            panels.insert(c.clone(), verdicts);
        }
        let mut results = BTreeMap::new();
        for (p, pool_id, judges) in [(0usize, "frontier", FRONTIER), (1, "compact", COMPACT)] {
            let r = result_from_votes(&contract, &submission, pool_id, |c| votes_for(&judges, &panels[&c.criterion_id][p]));
            results.insert(pool_id.to_string(), r);
        }
        by_run.entry(run.clone()).or_default().push(TaskTrace {
            task_id: task_id.clone(),
            contract,
            submission: Some(submission),
            flags: TaskFlags::default(),
            results,
            extra: BTreeMap::new(),
        });
    }

    if noise {
        for (run, tasks) in by_run.iter_mut() {
            tasks.extend(noise_tasks(run));
        }
    }

    let traces = by_run
        .into_iter()
        .map(|(run_id, tasks)| RunTrace {
            run_id,
            solver_id: "solver".into(),
            grading_pool: "frontier".into(),
            pools: vec![frontier_pool(), compact_pool()],
            tasks,
            extra: BTreeMap::new(),
        })
        .collect();
    (traces, generated)
}

/// One task per filter clause, each violating exactly that clause (the tie
/// case necessarily also has a dropped vote).
pub fn noise_tasks(run: &str) -> Vec<TaskTrace> {
    use Verdict::{Fail as F, Pass as P, Unusable as U};
    let clean_f = [F, F, F, F, F];
    let clean_c = [P, P, F, F, F];
    let cases: [(&str, [Verdict; 5], [Verdict; 5], bool, &str); 4] = [
        ("noise_tie", clean_f, [P, P, F, F, U], false, "some text"),
        ("noise_reduced", [P, P, P, F, U], clean_c, false, "some text"),
        ("noise_flagged", clean_f, clean_c, true, "some text"),
        ("noise_blank", clean_f, clean_c, false, "   \n  "),
    ];
    cases
        .iter()
        .map(|(id, f, c, flagged, text)| {
            let task_id = format!("{id}_{run}");
            let contract = EvaluationContract {
                task_id: task_id.clone(),
                task_prompt: "noise".into(),
                reference_files: vec![],
                criteria: vec![Criterion {
                    criterion_id: "c0".into(),
                    grader_type: GraderType::LlmJudge,
                    semantic_prompt: "judge".into(),
                    weight: 100.0,
                }],
                pass_threshold: 50.0,
                metadata: BTreeMap::new(),
            };
            let submission = Submission::new(&task_id, "solver", *text);
            let mut results = BTreeMap::new();
            results.insert("frontier".to_string(), result_from_votes(&contract, &submission, "frontier", |_| votes_for(&FRONTIER, f)));
            results.insert("compact".to_string(), result_from_votes(&contract, &submission, "compact", |_| votes_for(&COMPACT, c)));
            let flags = TaskFlags {
                verifier_error: flagged.then(|| "verifier crashed".to_string()),
                ..Default::default()
            };
            TaskTrace { task_id, contract, submission: Some(submission), flags, results, extra: BTreeMap::new() }
        })
        .collect()
}

// ------------------------------------------------- proportional-odds MLE

/// Maximum-likelihood fit of `Pr(y ≤ k) = σ(θ_k − xβ)` with no intercept in
/// `x` (the cutpoints absorb it) and no random effects.
#[derive(Debug, Clone)]
pub struct PoFit {
    pub cutpoints: [f64; 2],
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
}

fn po_loglik(theta: &[f64], x: &[Vec<f64>], y: &[u8]) -> f64 {
    let (t0, t1) = (theta[0], theta[1]);
    if t0 >= t1 {
        return f64::NEG_INFINITY;
    }
    let mut ll = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let eta: f64 = row.iter().zip(&theta[2..]).map(|(a, b)| a * b).sum();
        let f0 = logistic(t0 - eta);
        let f1 = logistic(t1 - eta);
        ll += match yi {
            0 => f0.ln(),
            1 => (f1 - f0).ln(),
            _ => (1.0 - f1).ln(),
        };
    }
    ll
}

fn po_gradient(theta: &[f64], x: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let (t0, t1) = (theta[0], theta[1]);
    let mut g = vec![0.0; theta.len()];
    for (row, &yi) in x.iter().zip(y) {
        let eta: f64 = row.iter().zip(&theta[2..]).map(|(a, b)| a * b).sum();
        let f0 = logistic(t0 - eta);
        let f1 = logistic(t1 - eta);
        let (d0, d1, deta) = match yi {
            0 => (1.0 - f0, 0.0, -(1.0 - f0)),
            2 => (0.0, -f1, f1),
            _ => {
                let p = f1 - f0;
                let (g0, g1) = (f0 * (1.0 - f0), f1 * (1.0 - f1));
                (-g0 / p, g1 / p, -(g1 - g0) / p)
            }
        };
        g[0] += d0;
        g[1] += d1;
        for (j, xj) in row.iter().enumerate() {
            g[2 + j] += deta * xj;
        }
    }
    g
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut out = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * out[c]).sum();
        out[r] = (b[r] - s) / a[r][r];
    }
    out
}

fn hessian(theta: &[f64], x: &[Vec<f64>], y: &[u8]) -> Vec<Vec<f64>> {
    let n = theta.len();
    let h = 1e-6;
    let mut hess = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[j] += h;
        dn[j] -= h;
        let (gu, gd) = (po_gradient(&up, x, y), po_gradient(&dn, x, y));
        for i in 0..n {
            hess[i][j] = (gu[i] - gd[i]) / (2.0 * h);
        }
    }
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (hess[i][j] + hess[j][i]);
            hess[i][j] = m;
            hess[j][i] = m;
        }
    }
    hess
}

pub fn fit_proportional_odds(x: &[Vec<f64>], y: &[u8]) -> PoFit {
    let p = x[0].len();
    let mut theta = vec![0.0; p + 2];
    theta[0] = -0.5;
    theta[1] = 0.5;
    let mut ll = po_loglik(&theta, x, y);
    let mut iterations = 0;
    for it in 0..100 {
        iterations = it + 1;
        let g = po_gradient(&theta, x, y);
        if g.iter().all(|v| v.abs() < 1e-9) {
            break;
        }
        let hess = hessian(&theta, x, y);
        let neg: Vec<Vec<f64>> = hess.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let step = solve(neg, g);
        let mut scale = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + scale * s).collect();
            let cll = po_loglik(&cand, x, y);
            if cll >= ll - 1e-12 || scale < 1e-8 {
                theta = cand;
                ll = cll;
                break;
            }
            scale *= 0.5;
        }
    }
    let hess = hessian(&theta, x, y);
    let n = theta.len();
    let neg: Vec<Vec<f64>> = hess.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let std_errors = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            solve(neg.clone(), e)[j].sqrt()
        })
        .collect();
    PoFit { cutpoints: [theta[0], theta[1]], beta: theta[2..].to_vec(), std_errors, loglik: ll, iterations }
}

impl PoFit {
    pub fn predict(&self, row: &[f64]) -> [f64; 3] {
        let eta: f64 = row.iter().zip(&self.beta).map(|(a, b)| a * b).sum();
        let f0 = logistic(self.cutpoints[0] - eta);
        let f1 = logistic(self.cutpoints[1] - eta);
        [f0, f1 - f0, 1.0 - f1]
    }
}
