use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Paired task-score comparison between two pools.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStability {
    pub n: usize,
    /// Absent when either vector is constant or `n < 2`.
    pub pearson_r: Option<f64>,
    pub median_delta: f64,
    pub mean_abs_delta: f64,
    /// Sample standard deviation of `a − b`; absent when `n < 2`.
    pub sd_delta: Option<f64>,
    pub max_abs_delta: f64,
    pub frac_zero: f64,
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn score_stability(a: &[f64], b: &[f64]) -> Result<ScoreStability, AnalyticsError> {
    if a.len() != b.len() {
        return Err(AnalyticsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(AnalyticsError::EmptySample);
    }
    let deltas: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = deltas.len();
    let mut sorted = deltas.clone();
    sorted.sort_by(f64::total_cmp);
    let mean = deltas.iter().sum::<f64>() / n as f64;
    let sd_delta =
        (n >= 2).then(|| (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    Ok(ScoreStability {
        n,
        pearson_r: pearson(a, b),
        median_delta: median(&sorted),
        mean_abs_delta: deltas.iter().map(|d| d.abs()).sum::<f64>() / n as f64,
        sd_delta,
        max_abs_delta: deltas.iter().map(|d| d.abs()).fold(0.0, f64::max),
        frac_zero: deltas.iter().filter(|d| **d == 0.0).count() as f64 / n as f64,
    })
}

/// Σ S / (100 n), a fraction in `[0, 1]`.
pub fn benchmark_aggregate(scores: &[f64]) -> Result<f64, AnalyticsError> {
    if scores.is_empty() {
        return Err(AnalyticsError::EmptySample);
    }
    Ok(scores.iter().sum::<f64>() / (100.0 * scores.len() as f64))
}

/// Fraction of `(score, threshold)` pairs with `score ≥ threshold`.
pub fn pass_rate(scored: &[(f64, f64)]) -> Result<f64, AnalyticsError> {
    if scored.is_empty() {
        return Err(AnalyticsError::EmptySample);
    }
    Ok(scored.iter().filter(|(s, t)| s >= t).count() as f64 / scored.len() as f64)
}
