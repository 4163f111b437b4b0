use std::collections::BTreeMap;

use crate::metrics::{roc_auc, score_metric};
use crate::rdb::{MetricName, Split, TargetKind, TaskRow, TaskTable};
use crate::stats::pearson;

/// Train rows per entity in timestamp order (stable for equal timestamps).
pub(crate) fn train_histories(task: &TaskTable) -> BTreeMap<usize, Vec<&TaskRow>> {
    let mut by_entity: BTreeMap<usize, Vec<&TaskRow>> = BTreeMap::new();
    for r in task.rows_in(Split::Train) {
        by_entity.entry(r.entity).or_default().push(r);
    }
    for rows in by_entity.values_mut() {
        rows.sort_by_key(|r| r.timestamp);
    }
    by_entity
}

/// Pearson correlation of `(y_t, y_{t−lag})` pooled over every entity's
/// time-ordered train labels. `None` with fewer than two pairs or zero
/// variance.
pub fn temporal_autocorr(task: &TaskTable, lag: usize) -> Option<f64> {
    if lag == 0 {
        return None;
    }
    let mut now = Vec::new();
    let mut before = Vec::new();
    for rows in train_histories(task).values() {
        for k in lag..rows.len() {
            now.push(rows[k].label);
            before.push(rows[k - lag].label);
        }
    }
    pearson(&now, &before)
}

/// Score of predicting each val row by its entity's mean train label
/// (unseen entities get 0). Multiclass tasks use per-entity class
/// frequencies: macro one-vs-rest AUROC or argmax accuracy.
pub fn entity_mean_heuristic(task: &TaskTable) -> Result<f64, String> {
    if task.count(Split::Train) == 0 || task.count(Split::Val) == 0 {
        return Err("train and val splits must be non-empty".into());
    }
    let classes = match task.target {
        TargetKind::Classification { num_classes } if num_classes > 2 => num_classes,
        _ => 1,
    };
    let mut sums: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for r in task.rows_in(Split::Train) {
        let e = sums.entry(r.entity).or_insert_with(|| (vec![0.0; classes], 0));
        if classes == 1 {
            e.0[0] += r.label;
        } else {
            e.0[r.label as usize] += 1.0;
        }
        e.1 += 1;
    }
    let predict = |entity: usize| -> Vec<f64> {
        sums.get(&entity)
            .map(|(s, n)| s.iter().map(|v| v / *n as f64).collect())
            .unwrap_or_else(|| vec![0.0; classes])
    };
    let val: Vec<&TaskRow> = task.rows_in(Split::Val).collect();
    let labels: Vec<f64> = val.iter().map(|r| r.label).collect();
    let preds: Vec<Vec<f64>> = val.iter().map(|r| predict(r.entity)).collect();
    let metric = task.metric.name;
    if classes == 1 {
        let p: Vec<f64> = preds.iter().map(|p| p[0]).collect();
        return score_metric(metric, &p, &labels).map_err(|e| e.to_string());
    }
    match metric {
        MetricName::RocAuc => {
            let aucs: Vec<f64> = (0..classes)
                .filter_map(|k| {
                    let yk: Vec<f64> = labels.iter().map(|&y| (y as usize == k) as u8 as f64).collect();
                    let pk: Vec<f64> = preds.iter().map(|p| p[k]).collect();
                    roc_auc(&pk, &yk).ok()
                })
                .collect();
            if aucs.is_empty() {
                return Err("no class has both labels in val".into());
            }
            Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
        }
        _ => {
            let argmax: Vec<f64> = preds
                .iter()
                .map(|p| (0..classes).max_by(|&a, &b| p[a].total_cmp(&p[b]).then(b.cmp(&a))).unwrap_or(0) as f64)
                .collect();
            score_metric(metric, &argmax, &labels).map_err(|e| e.to_string())
        }
    }
}
