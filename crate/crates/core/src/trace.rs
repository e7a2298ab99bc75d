//! Persisted audit traces and score replay.
//!
//! Layout under a trace root:
//!
//! ```text
//! <root>/<run_id>/manifest.json
//! <root>/<run_id>/<task_id>/detail.json
//! ```
//!
//! Each task document carries the contract, the submission, every pool's
//! criterion results with per-judge votes, rationales and telemetry. Task
//! documents are written atomically (temp file then rename); the manifest is
//! written last by a single writer.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::contract::{EvaluationContract, GraderType};
use crate::gateway::{JuryPool, POOL_SIZE};
use crate::grading::{jury_consensus, Submission, TaskResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DETAIL_FILE: &str = "detail.json";

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("i/o error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt trace at {path}: {reason}")]
    CorruptTrace { path: PathBuf, reason: String },
    #[error("task `{task_id}` has no `{pool_id}` votes for criterion `{criterion_id}`")]
    MissingPoolVotes { task_id: String, pool_id: String, criterion_id: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> TraceError {
    TraceError::CorruptTrace { path: path.to_path_buf(), reason: reason.into() }
}

/// Per-task error markers; any set flag excludes the task from analysis.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskFlags {
    #[serde(default)]
    pub missing_submission: bool,
    #[serde(default)]
    pub empty_results: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifier_error: Option<String>,
}

impl TaskFlags {
    pub fn any(&self) -> bool {
        self.missing_submission || self.empty_results || self.verifier_error.is_some()
    }
}

/// Everything recorded about one task in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTrace {
    pub task_id: String,
    pub contract: EvaluationContract,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submission: Option<Submission>,
    #[serde(default)]
    pub flags: TaskFlags,
    /// Task results keyed by the pool that judged the llm-judge criteria.
    #[serde(default)]
    pub results: BTreeMap<String, TaskResult>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl TaskTrace {
    pub fn is_graded(&self) -> bool {
        !self.flags.any() && !self.results.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run_id: String,
    pub solver_id: String,
    /// Pool whose votes produced the official task results.
    pub grading_pool: String,
    pub pools: Vec<JuryPool>,
    pub tasks: Vec<TaskTrace>,
    #[serde(default, flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl RunTrace {
    pub fn task(&self, task_id: &str) -> Option<&TaskTrace> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn has_pool(&self, pool_id: &str) -> bool {
        self.pools.iter().any(|p| p.pool_id == pool_id)
    }

    /// Official results of graded tasks, in task order.
    pub fn official_results(&self) -> impl Iterator<Item = &TaskResult> {
        self.tasks.iter().filter(|t| t.is_graded()).filter_map(|t| t.results.get(&self.grading_pool))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Graded,
    ExcludedFromGrading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub task_id: String,
    pub status: TaskStatus,
    pub flags: TaskFlags,
    pub document: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub run_id: String,
    pub solver_id: String,
    pub grading_pool: String,
    pub pools: Vec<JuryPool>,
    pub tasks: Vec<ManifestEntry>,
    #[serde(default, flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct TaskDocument {
    schema_version: u32,
    #[serde(flatten)]
    task: TaskTrace,
}

pub fn run_dir(root: &Path, run_id: &str) -> PathBuf {
    root.join(run_id)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), TraceError> {
    let dir = path.parent().expect("document path has a parent");
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = dir.join(format!(".{}.tmp-{}", path.file_name().unwrap().to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Write one task document. Safe to call concurrently for distinct tasks.
pub fn write_task_document(root: &Path, run_id: &str, task: &TaskTrace) -> Result<PathBuf, TraceError> {
    let path = run_dir(root, run_id).join(&task.task_id).join(DETAIL_FILE);
    let doc = TaskDocument { schema_version: SCHEMA_VERSION, task: task.clone() };
    let bytes = serde_json::to_vec_pretty(&doc).expect("task document serializes");
    write_atomic(&path, &bytes)?;
    Ok(path)
}

pub fn manifest_for(run: &RunTrace) -> Manifest {
    Manifest {
        schema_version: SCHEMA_VERSION,
        run_id: run.run_id.clone(),
        solver_id: run.solver_id.clone(),
        grading_pool: run.grading_pool.clone(),
        pools: run.pools.clone(),
        tasks: run
            .tasks
            .iter()
            .map(|t| ManifestEntry {
                task_id: t.task_id.clone(),
                status: if t.flags.any() { TaskStatus::ExcludedFromGrading } else { TaskStatus::Graded },
                flags: t.flags.clone(),
                document: format!("{}/{}", t.task_id, DETAIL_FILE),
            })
            .collect(),
        extra: run.extra.clone(),
    }
}

pub fn write_trace(run: &RunTrace, root: &Path) -> Result<Manifest, TraceError> {
    for task in &run.tasks {
        if task.task_id.is_empty() || task.task_id.contains(['/', '\\']) || task.task_id == "." || task.task_id == ".." {
            return Err(corrupt(&run_dir(root, &run.run_id), format!("task id `{}` is not a valid directory name", task.task_id)));
        }
        write_task_document(root, &run.run_id, task)?;
    }
    let manifest = manifest_for(run);
    let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&run_dir(root, &run.run_id).join(MANIFEST_FILE), &bytes)?;
    Ok(manifest)
}

pub fn read_manifest(root: &Path, run_id: &str) -> Result<Manifest, TraceError> {
    let path = run_dir(root, run_id).join(MANIFEST_FILE);
    let raw = fs::read_to_string(&path).map_err(|e| corrupt(&path, format!("manifest unreadable: {e}")))?;
    let manifest: Manifest = serde_json::from_str(&raw).map_err(|e| corrupt(&path, e.to_string()))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(corrupt(&path, format!("unsupported schema_version {}", manifest.schema_version)));
    }
    Ok(manifest)
}

pub fn read_trace(root: &Path, run_id: &str) -> Result<RunTrace, TraceError> {
    let manifest = read_manifest(root, run_id)?;
    let dir = run_dir(root, run_id);
    let tasks = manifest
        .tasks
        .iter()
        .map(|entry| {
            let path = dir.join(&entry.document);
            let raw = fs::read_to_string(&path).map_err(|e| corrupt(&path, format!("task document unreadable: {e}")))?;
            let doc: TaskDocument = serde_json::from_str(&raw).map_err(|e| corrupt(&path, e.to_string()))?;
            if doc.schema_version != SCHEMA_VERSION {
                return Err(corrupt(&path, format!("unsupported schema_version {}", doc.schema_version)));
            }
            if doc.task.task_id != entry.task_id {
                return Err(corrupt(&path, format!("document is for task `{}`, manifest says `{}`", doc.task.task_id, entry.task_id)));
            }
            Ok(doc.task)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunTrace {
        run_id: manifest.run_id,
        solver_id: manifest.solver_id,
        grading_pool: manifest.grading_pool,
        pools: manifest.pools,
        tasks,
        extra: manifest.extra,
    })
}

/// Run ids present under a trace root (directories holding a manifest).
pub fn list_runs(root: &Path) -> Result<Vec<String>, TraceError> {
    let mut runs: Vec<String> = fs::read_dir(root)
        .map_err(io_err(root))?
        .filter_map(Result::ok)
        .filter(|e| e.path().join(MANIFEST_FILE).is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    runs.sort();
    Ok(runs)
}

/// Recompute every graded task's score with `pool_id` judging the llm-judge
/// criteria, keeping ExactMatch awards at their official values.
///
/// Consensus is recomputed from the raw votes, not read from stored
/// decisions. Flagged tasks are omitted.
pub fn replay_scores(trace: &RunTrace, pool_id: &str) -> Result<BTreeMap<String, f64>, TraceError> {
    let mut scores = BTreeMap::new();
    for task in trace.tasks.iter().filter(|t| t.is_graded()) {
        let Some(official) = task.results.get(&trace.grading_pool) else { continue };
        let pool_result = task.results.get(pool_id);
        let mut score = 0.0;
        for official_c in &official.criterion_results {
            let awarded = match official_c.grader_type {
                GraderType::ExactMatch => {
                    if official_c.decision.is_pass() {
                        official_c.weight
                    } else {
                        0.0
                    }
                }
                GraderType::LlmJudge => {
                    let judged = pool_result.and_then(|r| r.criterion(&official_c.criterion_id)).ok_or_else(|| {
                        TraceError::MissingPoolVotes {
                            task_id: task.task_id.clone(),
                            pool_id: pool_id.to_string(),
                            criterion_id: official_c.criterion_id.clone(),
                        }
                    })?;
                    if jury_consensus(judged.votes.iter().map(|v| v.verdict)).is_pass() {
                        official_c.weight
                    } else {
                        0.0
                    }
                }
            };
            score += awarded;
        }
        scores.insert(task.task_id.clone(), score);
    }
    Ok(scores)
}

/// Structural audit of a trace: criterion ids resolve to the contract,
/// stored scores replay exactly, and every jury panel has one vote per judge.
pub fn audit_trace(trace: &RunTrace) -> Vec<String> {
    let mut problems = Vec::new();
    for task in &trace.tasks {
        for (pool_id, result) in &task.results {
            for c in &result.criterion_results {
                if task.contract.criterion(&c.criterion_id).is_none() {
                    problems.push(format!("{}/{}: criterion {} not in contract", task.task_id, pool_id, c.criterion_id));
                }
                if c.grader_type == GraderType::LlmJudge && c.votes.len() != POOL_SIZE {
                    problems.push(format!(
                        "{}/{}: criterion {} has {} votes recorded",
                        task.task_id,
                        pool_id,
                        c.criterion_id,
                        c.votes.len()
                    ));
                }
            }
        }
    }
    for pool in &trace.pools {
        match replay_scores(trace, &pool.pool_id) {
            Ok(replayed) => {
                for task in trace.tasks.iter().filter(|t| t.is_graded()) {
                    if let (Some(stored), Some(replayed)) = (task.results.get(&pool.pool_id), replayed.get(&task.task_id)) {
                        if stored.score.to_bits() != replayed.to_bits() {
                            problems.push(format!(
                                "{}/{}: stored score {} but replay gives {}",
                                task.task_id, pool.pool_id, stored.score, replayed
                            ));
                        }
                    }
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
    }
    problems
}
