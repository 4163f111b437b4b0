//! Task evaluation metrics.

use thiserror::Error;

use crate::rdb::MetricName;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("prediction and label lengths differ")]
    LengthMismatch,
    #[error("no samples to score")]
    Empty,
    #[error("roc_auc needs both classes among the labels")]
    SingleClass,
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Rank-statistic AUROC; labels > 0.5 are positives.
pub fn roc_auc(preds: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    check(preds, labels)?;
    let ranks = average_ranks(preds);
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] > 0.5).collect();
    let n_pos = pos.len() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(MetricError::SingleClass);
    }
    let rank_sum: f64 = pos.iter().map(|&i| ranks[i]).sum();
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

pub fn mae(preds: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    check(preds, labels)?;
    Ok(preds.iter().zip(labels).map(|(p, y)| (p - y).abs()).sum::<f64>() / preds.len() as f64)
}

/// Fraction of predictions that round to the label.
pub fn accuracy(preds: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    check(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(p, y)| p.round() == y.round()).count();
    Ok(hits as f64 / preds.len() as f64)
}

pub fn score_metric(name: MetricName, preds: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    match name {
        MetricName::RocAuc => roc_auc(preds, labels),
        MetricName::Mae => mae(preds, labels),
        MetricName::Accuracy => accuracy(preds, labels),
    }
}

fn check(preds: &[f64], labels: &[f64]) -> Result<(), MetricError> {
    if preds.len() != labels.len() {
        return Err(MetricError::LengthMismatch);
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}
