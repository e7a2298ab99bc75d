use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    common_subset_agreement, cross_run_summary, dissent_rates, economics_from_instances, instances_from_trace,
    majority_agreement, AnalyticsError, CommonSubsetAgreement, CrossRunSummary, DissentRates, EconomicsSummary, Rate,
};
use super::stability::{benchmark_aggregate, pass_rate, score_stability, ScoreStability};
use crate::trace::RunTrace;

/// Paired-pool analytics for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub run_id: String,
    pub solver_id: String,
    pub pool_a: String,
    pub pool_b: String,
    /// Criterion instances graded by both pools.
    pub n_instances: usize,
    pub majority_agreement: Rate,
    pub dissent: BTreeMap<String, DissentRates>,
    /// Tasks graded by both pools, sorted by task_id.
    pub task_ids: Vec<String>,
    pub scores: BTreeMap<String, Vec<f64>>,
    pub stability: Option<ScoreStability>,
    pub benchmark_aggregate: BTreeMap<String, Option<f64>>,
    pub pass_rate: BTreeMap<String, Option<f64>>,
    pub economics: Option<EconomicsSummary>,
}

/// Cross-run means with run-wise ranges, as fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRunTable {
    pub agreement: Option<CrossRunSummary>,
    pub one_dissenter: BTreeMap<String, Option<CrossRunSummary>>,
    pub split: BTreeMap<String, Option<CrossRunSummary>>,
    pub pearson_r: Option<CrossRunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDocument {
    pub pool_a: String,
    pub pool_b: String,
    pub runs: Vec<ComparisonReport>,
    pub common_subset: Option<CommonSubsetAgreement>,
    pub cross_run: Option<CrossRunTable>,
}

fn compare_run(trace: &RunTrace, pool_a: &str, pool_b: &str) -> Result<ComparisonReport, AnalyticsError> {
    for pool in [pool_a, pool_b] {
        if !trace.has_pool(pool) {
            return Err(AnalyticsError::MissingPool { run_id: trace.run_id.clone(), pool_id: pool.to_string() });
        }
    }
    let instances: Vec<_> = instances_from_trace(trace)
        .into_iter()
        .filter(|i| i.panel(pool_a).is_some() && i.panel(pool_b).is_some())
        .collect();

    let mut dissent = BTreeMap::new();
    for pool in [pool_a, pool_b] {
        if let Ok(d) = dissent_rates(&instances, pool) {
            dissent.insert(pool.to_string(), d);
        }
    }

    let mut tasks: Vec<_> = trace
        .tasks
        .iter()
        .filter(|t| t.results.contains_key(pool_a) && t.results.contains_key(pool_b))
        .collect();
    tasks.sort_by(|x, y| x.task_id.cmp(&y.task_id));
    let task_ids = tasks.iter().map(|t| t.task_id.clone()).collect();

    let mut scores = BTreeMap::new();
    let mut aggregate = BTreeMap::new();
    let mut passes = BTreeMap::new();
    for pool in [pool_a, pool_b] {
        let results: Vec<_> = tasks.iter().map(|t| &t.results[pool]).collect();
        let s: Vec<f64> = results.iter().map(|r| r.score).collect();
        let pairs: Vec<(f64, f64)> = results.iter().map(|r| (r.score, r.pass_threshold)).collect();
        aggregate.insert(pool.to_string(), benchmark_aggregate(&s).ok());
        passes.insert(pool.to_string(), pass_rate(&pairs).ok());
        scores.insert(pool.to_string(), s);
    }
    let stability = score_stability(&scores[pool_a], &scores[pool_b]).ok();

    Ok(ComparisonReport {
        run_id: trace.run_id.clone(),
        solver_id: trace.solver_id.clone(),
        pool_a: pool_a.to_string(),
        pool_b: pool_b.to_string(),
        n_instances: instances.len(),
        majority_agreement: majority_agreement(&instances, pool_a, pool_b),
        dissent,
        task_ids,
        scores,
        stability,
        benchmark_aggregate: aggregate,
        pass_rate: passes,
        economics: economics_from_instances(&instances, pool_a, pool_b).ok(),
    })
}

fn cross_run_table(runs: &[ComparisonReport], pool_a: &str, pool_b: &str) -> CrossRunTable {
    let collect = |f: &dyn Fn(&ComparisonReport) -> Option<f64>| -> Option<CrossRunSummary> {
        let v: Vec<f64> = runs.iter().filter_map(f).collect();
        cross_run_summary(&v)
    };
    let mut one_dissenter = BTreeMap::new();
    let mut split = BTreeMap::new();
    for pool in [pool_a, pool_b] {
        one_dissenter.insert(pool.to_string(), collect(&|r| r.dissent.get(pool)?.one_dissenter));
        split.insert(pool.to_string(), collect(&|r| r.dissent.get(pool)?.split));
    }
    CrossRunTable {
        agreement: collect(&|r| r.majority_agreement.value),
        one_dissenter,
        split,
        pearson_r: collect(&|r| r.stability?.pearson_r),
    }
}

/// Per-run reports, plus common-subset agreement and cross-run summaries when
/// more than one run is given.
pub fn compare_runs(traces: &[RunTrace], pool_a: &str, pool_b: &str) -> Result<ComparisonDocument, AnalyticsError> {
    if traces.is_empty() {
        return Err(AnalyticsError::NotEnoughRuns { needed: 1, got: 0 });
    }
    let mut sorted: Vec<&RunTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let runs = sorted.iter().map(|t| compare_run(t, pool_a, pool_b)).collect::<Result<Vec<_>, _>>()?;
    let (common_subset, cross_run) = if runs.len() > 1 {
        let instances: Vec<_> = sorted.iter().map(|t| instances_from_trace(t)).collect();
        let slices: Vec<&[_]> = instances.iter().map(|v| v.as_slice()).collect();
        (common_subset_agreement(&slices, pool_a, pool_b).ok(), Some(cross_run_table(&runs, pool_a, pool_b)))
    } else {
        (None, None)
    };
    Ok(ComparisonDocument { pool_a: pool_a.to_string(), pool_b: pool_b.to_string(), runs, common_subset, cross_run })
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.1}", 100.0 * x)).unwrap_or_else(|| "-".into())
}

fn num(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

fn summary_cell(s: Option<CrossRunSummary>) -> String {
    match s {
        Some(s) => format!("{:.1}% ({:.1}-{:.1})", 100.0 * s.mean, 100.0 * s.min, 100.0 * s.max),
        None => "-".into(),
    }
}

/// Plain-text agreement, per-run and economics tables.
pub fn render_tables(doc: &ComparisonDocument) -> String {
    let (a, b) = (doc.pool_a.as_str(), doc.pool_b.as_str());
    let mut out = String::new();

    let _ = writeln!(out, "Agreement ({a} vs {b})");
    if let Some(cross) = &doc.cross_run {
        let _ = writeln!(out, "  criterion agreement  {}", summary_cell(cross.agreement));
        for pool in [a, b] {
            let _ = writeln!(out, "  4:1 dissent [{pool}]  {}", summary_cell(cross.one_dissenter[pool]));
            let _ = writeln!(out, "  3:2 split [{pool}]    {}", summary_cell(cross.split[pool]));
        }
    } else if let Some(run) = doc.runs.first() {
        let _ = writeln!(out, "  criterion agreement  {}% (n={})", pct(run.majority_agreement.value), run.majority_agreement.n);
    }
    if let Some(cs) = &doc.common_subset {
        let _ = writeln!(out, "  common subset ({} keys) mean  {}%", cs.keys.len(), pct(cs.mean));
    }

    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<16} {:<16} {:>6} {:>8} {:>6} {:>13} {:>13} {:>7} {:>13} {:>13}",
        "run", "solver", "graded", "agree%", "n", "4:1 A/B", "3:2 A/B", "r", "bench A/B", "pass A/B"
    );
    for r in &doc.runs {
        let pair = |f: &dyn Fn(&str) -> Option<f64>| format!("{}/{}", pct(f(a)), pct(f(b)));
        let _ = writeln!(
            out,
            "{:<16} {:<16} {:>6} {:>8} {:>6} {:>13} {:>13} {:>7} {:>13} {:>13}",
            r.run_id,
            r.solver_id,
            r.task_ids.len(),
            pct(r.majority_agreement.value),
            r.majority_agreement.n,
            pair(&|p| r.dissent.get(p)?.one_dissenter),
            pair(&|p| r.dissent.get(p)?.split),
            num(r.stability.and_then(|s| s.pearson_r), 3),
            pair(&|p| r.benchmark_aggregate.get(p).copied().flatten()),
            pair(&|p| r.pass_rate.get(p).copied().flatten()),
        );
    }

    for r in &doc.runs {
        let Some(e) = &r.economics else { continue };
        let _ = writeln!(out);
        let _ = writeln!(out, "Economics per criterion, run {} (n={})", r.run_id, e.baseline.n);
        let _ = writeln!(out, "{:<24} {:>12} {:>12} {:>10}", "metric", a, b, "reduction");
        let rows = [
            ("cost (USD)", e.baseline.cost_usd, e.candidate.cost_usd, e.reductions.cost_usd, 4),
            ("latency (ms)", e.baseline.latency_ms, e.candidate.latency_ms, e.reductions.latency_ms, 0),
            (
                "latency concurrent (ms)",
                e.baseline.latency_ms_concurrent,
                e.candidate.latency_ms_concurrent,
                e.reductions.latency_ms_concurrent,
                0,
            ),
            ("output tokens", e.baseline.output_tokens, e.candidate.output_tokens, e.reductions.output_tokens, 1),
            ("total tokens", e.baseline.total_tokens, e.candidate.total_tokens, e.reductions.total_tokens, 1),
        ];
        for (name, x, y, red, d) in rows {
            let _ = writeln!(out, "{name:<24} {:>12} {:>12} {:>9}%", num(Some(x), d), num(Some(y), d), pct(red));
        }
    }
    out
}
