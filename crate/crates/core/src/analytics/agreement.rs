use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, CriterionInstance, InstanceKey, Rate};
use crate::grading::VotePattern;

/// Share of instances on which both pools reach the same decision.
pub fn majority_agreement(instances: &[CriterionInstance], pool_a: &str, pool_b: &str) -> Rate {
    let (hits, n) = instances
        .iter()
        .filter_map(|i| Some((i.panel(pool_a)?, i.panel(pool_b)?)))
        .fold((0, 0), |(hits, n), (a, b)| (hits + (a.decision == b.decision) as usize, n + 1));
    Rate::of(hits, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonSubsetAgreement {
    pub keys: Vec<InstanceKey>,
    pub per_run: Vec<Rate>,
    pub mean: Option<f64>,
}

/// Agreement restricted to criterion keys that every run graded under both pools.
pub fn common_subset_agreement(
    runs: &[&[CriterionInstance]],
    pool_a: &str,
    pool_b: &str,
) -> Result<CommonSubsetAgreement, AnalyticsError> {
    if runs.len() < 2 {
        return Err(AnalyticsError::NotEnoughRuns { needed: 2, got: runs.len() });
    }
    let key_sets: Vec<BTreeSet<&InstanceKey>> = runs
        .iter()
        .map(|run| {
            run.iter()
                .filter(|i| i.panel(pool_a).is_some() && i.panel(pool_b).is_some())
                .map(|i| &i.key)
                .collect()
        })
        .collect();
    let mut common = key_sets[0].clone();
    for set in &key_sets[1..] {
        common.retain(|k| set.contains(k));
    }
    if common.is_empty() {
        return Err(AnalyticsError::EmptyIntersection);
    }
    let per_run: Vec<Rate> = runs
        .iter()
        .map(|run| {
            let subset: Vec<CriterionInstance> = run.iter().filter(|i| common.contains(&i.key)).cloned().collect();
            majority_agreement(&subset, pool_a, pool_b)
        })
        .collect();
    let values: Vec<f64> = per_run.iter().filter_map(|r| r.value).collect();
    let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
    Ok(CommonSubsetAgreement { keys: common.into_iter().cloned().collect(), per_run, mean })
}

/// Within-pool disagreement profile.
///
/// `unanimous + one_dissenter + split = 1` over full panels; `reduced` is the
/// share of all panels that had fewer than five usable votes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissentRates {
    pub n_panels: usize,
    pub n_full: usize,
    pub unanimous: Option<f64>,
    pub one_dissenter: Option<f64>,
    pub split: Option<f64>,
    pub reduced: f64,
}

pub fn dissent_rates(instances: &[CriterionInstance], pool: &str) -> Result<DissentRates, AnalyticsError> {
    let patterns: Vec<VotePattern> = instances.iter().filter_map(|i| i.panel(pool)).map(|p| p.pattern).collect();
    if patterns.is_empty() {
        return Err(AnalyticsError::EmptySample);
    }
    let count = |want: VotePattern| patterns.iter().filter(|p| **p == want).count();
    let (u, o, s, r) =
        (count(VotePattern::Unanimous), count(VotePattern::OneDissenter), count(VotePattern::Split), count(VotePattern::Reduced));
    let full = u + o + s;
    let share = |k: usize| (full > 0).then(|| k as f64 / full as f64);
    Ok(DissentRates {
        n_panels: patterns.len(),
        n_full: full,
        unanimous: share(u),
        one_dissenter: share(o),
        split: share(s),
        reduced: r as f64 / patterns.len() as f64,
    })
}
