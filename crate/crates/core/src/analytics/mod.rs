//! Jury-pool comparison analytics over persisted traces.
//!
//! Everything here is a pure function of immutable trace snapshots. Rates
//! always travel with their sample size, and undefined statistics are
//! reported as absent rather than as 0 or NaN.

mod agreement;
mod economics;
mod ordinal;
mod report;
mod stability;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::contract::GraderType;
use crate::gateway::Verdict;
use crate::grading::{classify_vote_pattern, jury_consensus, Decision, PooledTelemetry, VotePattern};
use crate::trace::{RunTrace, TraceError};

pub use agreement::{common_subset_agreement, dissent_rates, majority_agreement, CommonSubsetAgreement, DissentRates};
pub use economics::{economics_from_instances, economics_summary, reduction, EconomicsSummary, PoolEconomics, Reductions};
pub use ordinal::{
    attach_length_feature, category_probabilities, comparable_row_filter, design_matrix, is_comparable, length_feature,
    odds_ratio, ordinal_predict, ordinal_predict_run_averaged, severity, ComparableRow, DesignMatrix, LengthScaler,
    OrdinalModelCoefficients, OrdinalRow, SdConvention,
};
pub use report::{compare_runs, render_tables, ComparisonDocument, ComparisonReport, CrossRunTable};
pub use stability::{benchmark_aggregate, pass_rate, pearson, score_stability, ScoreStability};

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("empty sample")]
    EmptySample,
    #[error("no criterion keys are shared by every run")]
    EmptyIntersection,
    #[error("need at least {needed} runs, got {got}")]
    NotEnoughRuns { needed: usize, got: usize },
    #[error("paired vectors differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sample is constant or has fewer than two values")]
    ConstantSample,
    #[error("severity is only defined for full five-vote panels")]
    ReducedPanel,
    #[error("cutpoints must satisfy tau0 < tau1")]
    InvalidCutpoints,
    #[error("pool `{pool_id}` not present in run `{run_id}`")]
    MissingPool { run_id: String, pool_id: String },
    #[error("no comparable rows remain after filtering")]
    EmptyAfterFilter,
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// A fraction with the sample it was computed on. `value` is absent when `n = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: Option<f64>,
    pub n: usize,
}

impl Rate {
    pub fn of(hits: usize, n: usize) -> Self {
        Rate { value: (n > 0).then(|| hits as f64 / n as f64), n }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceKey {
    pub task_id: String,
    pub criterion_id: String,
}

/// One pool's panel on one criterion instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolPanel {
    pub verdicts: Vec<Verdict>,
    pub decision: Decision,
    pub pattern: VotePattern,
    pub telemetry: PooledTelemetry,
}

impl PoolPanel {
    pub fn from_verdicts(verdicts: Vec<Verdict>, telemetry: PooledTelemetry) -> Self {
        PoolPanel {
            decision: jury_consensus(verdicts.iter().copied()),
            pattern: classify_vote_pattern(verdicts.iter().copied()),
            verdicts,
            telemetry,
        }
    }

    pub fn usable(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_usable()).count()
    }

    pub fn passes(&self) -> usize {
        self.verdicts.iter().filter(|v| **v == Verdict::Pass).count()
    }

    /// Even split of usable votes, including the empty panel.
    pub fn is_tie(&self) -> bool {
        2 * self.passes() == self.usable()
    }

    /// Five votes, none unusable.
    pub fn is_full(&self) -> bool {
        self.verdicts.len() == crate::gateway::POOL_SIZE && self.usable() == self.verdicts.len()
    }
}

/// One llm-judge criterion on one task within one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionInstance {
    pub run_id: String,
    pub key: InstanceKey,
    pub char_count: usize,
    /// Submission present with extracted text.
    pub has_submission_text: bool,
    pub task_flagged: bool,
    pub panels: BTreeMap<String, PoolPanel>,
}

impl CriterionInstance {
    pub fn panel(&self, pool_id: &str) -> Option<&PoolPanel> {
        self.panels.get(pool_id)
    }
}

/// Every llm-judge criterion instance graded by at least one pool.
pub fn instances_from_trace(trace: &RunTrace) -> Vec<CriterionInstance> {
    let mut out = Vec::new();
    for task in &trace.tasks {
        if task.results.is_empty() {
            continue;
        }
        let (char_count, has_text) =
            task.submission.as_ref().map(|s| (s.char_count, s.has_text())).unwrap_or((0, false));
        for criterion in task.contract.criteria.iter().filter(|c| c.grader_type == GraderType::LlmJudge) {
            let panels: BTreeMap<String, PoolPanel> = task
                .results
                .iter()
                .filter_map(|(pool_id, result)| {
                    result.criterion(&criterion.criterion_id).map(|c| {
                        (pool_id.clone(), PoolPanel::from_verdicts(c.verdicts(), c.pooled_telemetry()))
                    })
                })
                .collect();
            if panels.is_empty() {
                continue;
            }
            out.push(CriterionInstance {
                run_id: trace.run_id.clone(),
                key: InstanceKey { task_id: task.task_id.clone(), criterion_id: criterion.criterion_id.clone() },
                char_count,
                has_submission_text: has_text,
                task_flagged: task.flags.any(),
                panels,
            });
        }
    }
    out
}

/// Mean with the run-wise range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossRunSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n_runs: usize,
}

pub fn cross_run_summary(values: &[f64]) -> Option<CrossRunSummary> {
    if values.is_empty() {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(CrossRunSummary { mean, min, max, n_runs: values.len() })
}
