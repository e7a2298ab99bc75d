use serde::{Deserialize, Serialize};

use super::{AnalyticsError, CriterionInstance};
use crate::grading::PooledTelemetry;

/// Per-criterion means of pooled (five-call) telemetry for one pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolEconomics {
    pub n: usize,
    pub cost_usd: f64,
    /// Summed per-call wall time.
    pub latency_ms: f64,
    /// Longest call per panel, i.e. panel wall time when calls run concurrently.
    pub latency_ms_concurrent: f64,
    pub output_tokens: f64,
    pub total_tokens: f64,
}

impl PoolEconomics {
    pub fn from_pooled(pooled: &[PooledTelemetry]) -> Result<Self, AnalyticsError> {
        if pooled.is_empty() {
            return Err(AnalyticsError::EmptySample);
        }
        let n = pooled.len() as f64;
        let mean = |f: &dyn Fn(&PooledTelemetry) -> f64| pooled.iter().map(f).sum::<f64>() / n;
        Ok(PoolEconomics {
            n: pooled.len(),
            cost_usd: mean(&|p| p.cost_usd),
            latency_ms: mean(&|p| p.latency_ms_sum),
            latency_ms_concurrent: mean(&|p| p.latency_ms_max),
            output_tokens: mean(&|p| p.output_tokens as f64),
            total_tokens: mean(&|p| p.total_tokens as f64),
        })
    }
}

/// `1 − candidate / baseline`; absent when the baseline is zero.
pub fn reduction(baseline: f64, candidate: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 1.0 - candidate / baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reductions {
    pub cost_usd: Option<f64>,
    pub latency_ms: Option<f64>,
    pub latency_ms_concurrent: Option<f64>,
    pub output_tokens: Option<f64>,
    pub total_tokens: Option<f64>,
}

impl Reductions {
    pub fn between(baseline: &PoolEconomics, candidate: &PoolEconomics) -> Self {
        Reductions {
            cost_usd: reduction(baseline.cost_usd, candidate.cost_usd),
            latency_ms: reduction(baseline.latency_ms, candidate.latency_ms),
            latency_ms_concurrent: reduction(baseline.latency_ms_concurrent, candidate.latency_ms_concurrent),
            output_tokens: reduction(baseline.output_tokens, candidate.output_tokens),
            total_tokens: reduction(baseline.total_tokens, candidate.total_tokens),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicsSummary {
    pub baseline_pool: String,
    pub candidate_pool: String,
    pub baseline: PoolEconomics,
    pub candidate: PoolEconomics,
    pub reductions: Reductions,
}

/// Compare pooled telemetry of a baseline pool against a candidate pool on
/// the same criterion instances.
pub fn economics_summary(
    baseline_pool: &str,
    baseline: &[PooledTelemetry],
    candidate_pool: &str,
    candidate: &[PooledTelemetry],
) -> Result<EconomicsSummary, AnalyticsError> {
    if baseline.len() != candidate.len() {
        return Err(AnalyticsError::LengthMismatch { left: baseline.len(), right: candidate.len() });
    }
    let b = PoolEconomics::from_pooled(baseline)?;
    let c = PoolEconomics::from_pooled(candidate)?;
    Ok(EconomicsSummary {
        baseline_pool: baseline_pool.to_string(),
        candidate_pool: candidate_pool.to_string(),
        baseline: b,
        candidate: c,
        reductions: Reductions::between(&b, &c),
    })
}

pub fn economics_from_instances(
    instances: &[CriterionInstance],
    baseline_pool: &str,
    candidate_pool: &str,
) -> Result<EconomicsSummary, AnalyticsError> {
    let (b, c): (Vec<_>, Vec<_>) = instances
        .iter()
        .filter_map(|i| Some((i.panel(baseline_pool)?.telemetry, i.panel(candidate_pool)?.telemetry)))
        .unzip();
    economics_summary(baseline_pool, &b, candidate_pool, &c)
}
