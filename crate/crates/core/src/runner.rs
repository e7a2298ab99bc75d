//! Grade a bundle of pre-produced submissions under one or two jury pools.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::contract::EvaluationContract;
use crate::gateway::{validate_pools, JudgeGateway, JuryPool, PoolError};
use crate::grading::{grade_task, GradingError, Submission};
use crate::trace::{RunTrace, TaskFlags, TaskTrace};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("a run needs one or two pools, got {0}")]
    PoolCount(usize),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("task `{task_id}`, pool `{pool_id}`: {source}")]
    Grading { task_id: String, pool_id: String, source: GradingError },
    #[error("cannot read submissions from {path}: {message}")]
    Submissions { path: String, message: String },
}

/// A pool with the gateway that reaches its judges.
pub struct PoolRunner<'a> {
    pub pool: &'a JuryPool,
    pub gateway: &'a JudgeGateway,
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub run_id: String,
    pub solver_id: String,
    pub concurrency: usize,
}

/// Grade every contract under every pool. The first pool is the grading
/// pool. Missing or empty submissions flag the task and skip grading; only
/// configuration faults abort.
pub fn run_grading(
    contracts: &[EvaluationContract],
    submissions: &BTreeMap<String, Submission>,
    pools: &[PoolRunner<'_>],
    settings: &RunSettings,
) -> Result<RunTrace, RunError> {
    if pools.is_empty() || pools.len() > 2 {
        return Err(RunError::PoolCount(pools.len()));
    }
    let configs: Vec<JuryPool> = pools.iter().map(|p| p.pool.clone()).collect();
    validate_pools(&configs)?;

    let mut ordered: Vec<&EvaluationContract> = contracts.iter().collect();
    ordered.sort_by(|a, b| a.task_id.cmp(&b.task_id));

    let mut tasks = Vec::with_capacity(ordered.len());
    for contract in ordered {
        let submission = submissions.get(&contract.task_id).cloned();
        let mut flags = TaskFlags::default();
        let mut results = BTreeMap::new();
        match &submission {
            Some(s) if s.has_text() => {
                for runner in pools {
                    match grade_task(contract, s, runner.pool, runner.gateway, settings.concurrency) {
                        Ok(r) => {
                            results.insert(runner.pool.pool_id.clone(), r);
                        }
                        Err(GradingError::Gateway(e)) => {
                            return Err(RunError::Grading {
                                task_id: contract.task_id.clone(),
                                pool_id: runner.pool.pool_id.clone(),
                                source: GradingError::Gateway(e),
                            })
                        }
                        Err(other) => flags.verifier_error = Some(other.to_string()),
                    }
                }
                if flags.verifier_error.is_none() && results.values().any(|r| r.criterion_results.is_empty()) {
                    flags.empty_results = true;
                }
            }
            _ => flags.missing_submission = true,
        }
        tasks.push(TaskTrace {
            task_id: contract.task_id.clone(),
            contract: contract.clone(),
            submission,
            flags,
            results,
            extra: BTreeMap::new(),
        });
    }

    Ok(RunTrace {
        run_id: settings.run_id.clone(),
        solver_id: settings.solver_id.clone(),
        grading_pool: configs[0].pool_id.clone(),
        pools: configs,
        tasks,
        extra: BTreeMap::new(),
    })
}

/// Read `<dir>/<task_id>.txt` (or `.md`) for each contract. Absent files are
/// simply absent from the map.
pub fn load_submissions(
    dir: &Path,
    contracts: &[EvaluationContract],
    solver_id: &str,
) -> Result<BTreeMap<String, Submission>, RunError> {
    if !dir.is_dir() {
        return Err(RunError::Submissions { path: dir.display().to_string(), message: "not a directory".into() });
    }
    let mut out = BTreeMap::new();
    for c in contracts {
        for ext in ["txt", "md"] {
            let path = dir.join(format!("{}.{ext}", c.task_id));
            if path.is_file() {
                let text = fs::read_to_string(&path)
                    .map_err(|e| RunError::Submissions { path: path.display().to_string(), message: e.to_string() })?;
                out.insert(c.task_id.clone(), Submission::new(&c.task_id, solver_id, text));
                break;
            }
        }
    }
    Ok(out)
}
