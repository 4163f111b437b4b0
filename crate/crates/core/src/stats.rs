//! Small descriptive statistics shared across modules.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Pearson correlation; `None` when either side has zero variance or fewer
/// than two points.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Summary of a set of per-metapath values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub mode: f64,
    pub weighted_mean: f64,
}

impl Aggregates {
    /// `weights` need not be normalized. Returns `None` for empty input.
    pub fn compute(values: &[f64], weights: &[f64]) -> Option<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total_w: f64 = weights.iter().sum();
        let weighted_mean = if total_w > 0.0 {
            values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total_w
        } else {
            mean(values)
        };
        Some(Self {
            mean: mean(values),
            std: std_dev(values),
            min,
            max,
            mode: binned_mode(values, 10),
            weighted_mean,
        })
    }
}

/// Midpoint of the densest of `bins` equal-width bins over `[min, max]`;
/// the first bin wins ties.
pub fn binned_mode(values: &[f64], bins: usize) -> f64 {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return min;
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    min + width * (best as f64 + 0.5)
}
