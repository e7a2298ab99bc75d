//! Disagreement-severity features and the cumulative-logit prediction link.
//!
//! Rows are criterion instance × pool. Severity `D` is 0 for 5:0, 1 for 4:1
//! and 2 for 3:2. The linear predictor is
//! `η = α + β₁·L + β₂·C + β₃·L·C + γ_run + u` and
//! `Pr(D ≤ k) = σ(τ_k − η)` for `k ∈ {0, 1}`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, CriterionInstance, InstanceKey};
use crate::gateway::Verdict;
use crate::grading::VotePattern;

pub fn severity(verdicts: &[Verdict]) -> Result<u8, AnalyticsError> {
    match crate::grading::classify_vote_pattern(verdicts.iter().copied()) {
        VotePattern::Unanimous => Ok(0),
        VotePattern::OneDissenter => Ok(1),
        VotePattern::Split => Ok(2),
        _ => Err(AnalyticsError::ReducedPanel),
    }
}

/// One instance × pool row that passed the comparable-row filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparableRow {
    pub run_id: String,
    pub key: InstanceKey,
    pub pool_id: String,
    pub compact: bool,
    pub severity: u8,
    pub char_count: usize,
}

/// Both pools full and non-tied, task unflagged, submission text present.
pub fn is_comparable(instance: &CriterionInstance, frontier: &str, compact: &str) -> bool {
    let (Some(f), Some(c)) = (instance.panel(frontier), instance.panel(compact)) else {
        return false;
    };
    let non_tie = !f.is_tie() && !c.is_tie();
    let full = f.is_full() && c.is_full();
    non_tie && full && !instance.task_flagged && instance.has_submission_text
}

/// Long format: two rows (frontier, then compact) per comparable instance.
pub fn comparable_row_filter(instances: &[CriterionInstance], frontier: &str, compact: &str) -> Vec<ComparableRow> {
    let mut rows = Vec::new();
    for inst in instances.iter().filter(|i| is_comparable(i, frontier, compact)) {
        for (pool_id, is_compact) in [(frontier, false), (compact, true)] {
            let panel = inst.panel(pool_id).expect("checked by filter");
            rows.push(ComparableRow {
                run_id: inst.run_id.clone(),
                key: inst.key.clone(),
                pool_id: pool_id.to_string(),
                compact: is_compact,
                severity: severity(&panel.verdicts).expect("full panel"),
                char_count: inst.char_count,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// n − 1 denominator.
    #[default]
    Sample,
    /// n denominator.
    Population,
}

/// z-score of `log(1 + chars)` fitted on a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthScaler {
    pub mean: f64,
    pub sd: f64,
}

impl LengthScaler {
    pub fn fit(char_counts: &[f64], convention: SdConvention) -> Result<Self, AnalyticsError> {
        if char_counts.len() < 2 {
            return Err(AnalyticsError::ConstantSample);
        }
        let logs: Vec<f64> = char_counts.iter().map(|c| c.ln_1p()).collect();
        let n = logs.len() as f64;
        let mean = logs.iter().sum::<f64>() / n;
        let ss: f64 = logs.iter().map(|x| (x - mean).powi(2)).sum();
        let denom = match convention {
            SdConvention::Sample => n - 1.0,
            SdConvention::Population => n,
        };
        let sd = (ss / denom).sqrt();
        if sd.is_nan() || sd <= 0.0 {
            return Err(AnalyticsError::ConstantSample);
        }
        Ok(LengthScaler { mean, sd })
    }

    pub fn transform(&self, chars: f64) -> f64 {
        (chars.ln_1p() - self.mean) / self.sd
    }
}

pub fn length_feature(char_counts: &[f64], convention: SdConvention) -> Result<Vec<f64>, AnalyticsError> {
    let scaler = LengthScaler::fit(char_counts, convention)?;
    Ok(char_counts.iter().map(|&c| scaler.transform(c)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalRow {
    pub run_id: String,
    pub key: InstanceKey,
    pub pool_id: String,
    /// 1 for the compact pool.
    pub compact: u8,
    pub severity: u8,
    pub length: f64,
}

/// Add the length feature, fitted once per instance so both pool rows of an
/// instance share the same value.
pub fn attach_length_feature(
    rows: &[ComparableRow],
    convention: SdConvention,
) -> Result<(Vec<OrdinalRow>, LengthScaler), AnalyticsError> {
    if rows.is_empty() {
        return Err(AnalyticsError::EmptyAfterFilter);
    }
    let mut per_instance: BTreeMap<(&str, &InstanceKey), usize> = BTreeMap::new();
    for r in rows {
        per_instance.entry((r.run_id.as_str(), &r.key)).or_insert(r.char_count);
    }
    let counts: Vec<f64> = per_instance.values().map(|&c| c as f64).collect();
    let scaler = LengthScaler::fit(&counts, convention)?;
    let out = rows
        .iter()
        .map(|r| OrdinalRow {
            run_id: r.run_id.clone(),
            key: r.key.clone(),
            pool_id: r.pool_id.clone(),
            compact: r.compact as u8,
            severity: r.severity,
            length: scaler.transform(r.char_count as f64),
        })
        .collect();
    Ok((out, scaler))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalModelCoefficients {
    pub alpha: f64,
    pub beta_length: f64,
    pub beta_compact: f64,
    pub beta_interaction: f64,
    /// Run fixed effects; runs not listed (the reference) contribute 0.
    #[serde(default)]
    pub run_effects: BTreeMap<String, f64>,
    /// `[τ₀, τ₁]` with `τ₀ < τ₁`.
    pub cutpoints: [f64; 2],
    #[serde(default)]
    pub random_intercept: f64,
}

impl OrdinalModelCoefficients {
    pub fn linear_predictor(&self, length: f64, compact: f64, run: Option<&str>) -> f64 {
        let gamma = run.and_then(|r| self.run_effects.get(r)).copied().unwrap_or(0.0);
        self.alpha
            + self.beta_length * length
            + self.beta_compact * compact
            + self.beta_interaction * length * compact
            + gamma
            + self.random_intercept
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(Pr(D=0), Pr(D=1), Pr(D=2))` for a given linear predictor.
pub fn category_probabilities(eta: f64, cutpoints: [f64; 2]) -> Result<[f64; 3], AnalyticsError> {
    let [t0, t1] = cutpoints;
    if t0.is_nan() || t1.is_nan() || t0 >= t1 {
        return Err(AnalyticsError::InvalidCutpoints);
    }
    let le0 = logistic(t0 - eta);
    let le1 = logistic(t1 - eta);
    Ok([le0, (le1 - le0).max(0.0), 1.0 - le1])
}

pub fn ordinal_predict(
    coeffs: &OrdinalModelCoefficients,
    length: f64,
    compact: f64,
    run: Option<&str>,
) -> Result<[f64; 3], AnalyticsError> {
    category_probabilities(coeffs.linear_predictor(length, compact, run), coeffs.cutpoints)
}

/// Category probabilities averaged with equal weight over run profiles.
pub fn ordinal_predict_run_averaged(
    coeffs: &OrdinalModelCoefficients,
    length: f64,
    compact: f64,
    runs: &[&str],
) -> Result<[f64; 3], AnalyticsError> {
    if runs.is_empty() {
        return ordinal_predict(coeffs, length, compact, None);
    }
    let mut acc = [0.0; 3];
    for run in runs {
        let p = ordinal_predict(coeffs, length, compact, Some(run))?;
        for k in 0..3 {
            acc[k] += p[k];
        }
    }
    Ok(acc.map(|x| x / runs.len() as f64))
}

/// Multiplicative change in the odds of higher severity per unit predictor change.
pub fn odds_ratio(coefficient: f64) -> f64 {
    coefficient.exp()
}

/// Design matrix with reference-coded run dummies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub outcome: Vec<u8>,
    pub row_labels: Vec<[String; 4]>,
    pub reference_run: Option<String>,
}

pub const BASE_COLUMNS: [&str; 4] = ["intercept", "length", "compact", "length_x_compact"];

/// Columns `[intercept, L, C, L·C, run dummies]`; the lexicographically first
/// run is the reference.
pub fn design_matrix(rows: &[OrdinalRow]) -> DesignMatrix {
    let runs: BTreeSet<&str> = rows.iter().map(|r| r.run_id.as_str()).collect();
    let reference_run = runs.iter().next().map(|s| s.to_string());
    let dummies: Vec<&str> = runs.iter().skip(1).copied().collect();
    let mut columns: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    columns.extend(dummies.iter().map(|r| format!("run[{r}]")));

    let data = rows
        .iter()
        .map(|r| {
            let c = r.compact as f64;
            // + 0.0 keeps the product from printing as -0
            let mut x = vec![1.0, r.length, c, r.length * c + 0.0];
            x.extend(dummies.iter().map(|d| if *d == r.run_id { 1.0 } else { 0.0 }));
            x
        })
        .collect();
    DesignMatrix {
        columns,
        rows: data,
        outcome: rows.iter().map(|r| r.severity).collect(),
        row_labels: rows
            .iter()
            .map(|r| [r.run_id.clone(), r.key.task_id.clone(), r.key.criterion_id.clone(), r.pool_id.clone()])
            .collect(),
        reference_run,
    }
}

impl DesignMatrix {
    /// Flat CSV with identifier columns, design columns and the outcome `D`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["run_id".to_string(), "task_id".into(), "criterion_id".into(), "pool_id".into()];
        header.extend(self.columns.iter().cloned());
        header.push("D".into());
        w.write_record(&header).expect("in-memory csv");
        for ((labels, x), d) in self.row_labels.iter().zip(&self.rows).zip(&self.outcome) {
            let mut record: Vec<String> = labels.to_vec();
            record.extend(x.iter().map(|v| v.to_string()));
            record.push(d.to_string());
            w.write_record(&record).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }
}
