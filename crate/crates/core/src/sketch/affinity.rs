use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::dp::{dense_sketch, SketchConfig, SketchMode};
use super::features::encode_features;
use super::hasher::{mean_aggregate, random_mp_hasher};
use super::head::{fit_head, HeadKind};
use super::typed::TypedGraph;
use super::SketchError;
use crate::metrics::{roc_auc, score_metric};
use crate::rdb::{Database, MetricName, RelGraph, Split, TargetKind, TaskTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityConfig {
    pub sketch_width: usize,
    pub sketch_horizons: Vec<usize>,
    pub hasher_width: usize,
    pub hasher_layers: Vec<usize>,
    pub feature_hops: Vec<usize>,
    pub head: HeadKind,
    pub seed: u64,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        Self {
            sketch_width: 64,
            sketch_horizons: vec![1, 2, 3],
            hasher_width: 64,
            hasher_layers: vec![1, 2, 3],
            feature_hops: vec![1, 2],
            head: HeadKind::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AffinityReport {
    /// Probe name → validation score under the task metric; `None` when the
    /// probe could not be fitted or scored.
    pub scores: BTreeMap<String, Option<f64>>,
    pub diagnostics: BTreeMap<String, String>,
}

/// Node features for every node of `tg`, one encoded block per table.
pub fn node_features(db: &Database, graph: &RelGraph, tg: &TypedGraph) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); tg.num_nodes()];
    for (t, nt) in graph.node_types.iter().enumerate() {
        let block = encode_features(db, &nt.name);
        let base = tg.type_offset(t);
        for r in 0..nt.count {
            out[base + r] = block.as_ref().map(|b| b.rows[r].clone()).unwrap_or_default();
        }
    }
    out
}

/// Fit a head on train entity rows and score val rows for each probe
/// family: dense path sketch (`rfr_randomnbfnet_{T}`), random hasher
/// (`rfr_randomsage_{L}`), and raw mean-aggregated features
/// (`feat_affinity_{k}hop`).
pub fn affinity_scores(
    db: &Database,
    graph: &RelGraph,
    task: &TaskTable,
    cfg: &AffinityConfig,
) -> Result<AffinityReport, SketchError> {
    for split in [Split::Train, Split::Val] {
        if task.count(split) == 0 {
            return Err(SketchError::EmptySplit);
        }
    }
    let etype = graph
        .node_type_index(&task.entity_table)
        .ok_or_else(|| SketchError::UnknownNodeType(task.entity_table.clone()))?;
    let tg = TypedGraph::from_rel(graph);
    let base = tg.type_offset(etype);
    let entities: Vec<usize> = task
        .rows
        .iter()
        .filter(|r| r.split != Split::Test)
        .map(|r| r.entity)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos: BTreeMap<usize, usize> = entities.iter().enumerate().map(|(i, &e)| (e, i)).collect();

    let mut report = AffinityReport::default();
    let mut record = |name: String, rows: Result<Vec<Vec<f64>>, SketchError>| {
        let res = rows.and_then(|rows| probe_score(task, &pos, &rows, cfg.head));
        match res {
            Ok(s) => {
                report.scores.insert(name, Some(s));
            }
            Err(e) => {
                report.diagnostics.insert(name.clone(), e.to_string());
                report.scores.insert(name, None);
            }
        }
    };

    let sources: Vec<usize> = entities.iter().map(|e| base + e).collect();
    for &t in &cfg.sketch_horizons {
        let sc = SketchConfig::new(SketchMode::Dense, cfg.sketch_width, t, cfg.seed);
        record(format!("rfr_randomnbfnet_{t}"), dense_sketch(&tg, &sc, &sources).map(|m| m.rows));
    }

    let feats = node_features(db, graph, &tg);
    for &l in &cfg.hasher_layers {
        let h = random_mp_hasher(&tg, &feats, l, cfg.hasher_width, cfg.seed);
        record(format!("rfr_randomsage_{l}"), Ok(sources.iter().map(|&s| h[s].clone()).collect()));
    }

    let max_hop = cfg.feature_hops.iter().copied().max().unwrap_or(0);
    let mut agg = feats;
    for hop in 1..=max_hop {
        agg = mean_aggregate(&tg, &agg);
        if cfg.feature_hops.contains(&hop) {
            record(format!("feat_affinity_{hop}hop"), Ok(sources.iter().map(|&s| agg[s].clone()).collect()));
        }
    }
    Ok(report)
}

/// Train-standardized columns; zero-variance columns map to 0.
fn standardize(train: &mut [Vec<f64>], val: &mut [Vec<f64>]) {
    let p = train.first().map_or(0, Vec::len);
    let n = train.len() as f64;
    for j in 0..p {
        let mu = train.iter().map(|r| r[j]).sum::<f64>() / n;
        let sd = (train.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n).sqrt();
        for r in train.iter_mut().chain(val.iter_mut()) {
            r[j] = if sd > 0.0 { (r[j] - mu) / sd } else { 0.0 };
        }
    }
}

fn probe_score(
    task: &TaskTable,
    pos: &BTreeMap<usize, usize>,
    entity_rows: &[Vec<f64>],
    head: HeadKind,
) -> Result<f64, SketchError> {
    let take = |split: Split| -> (Vec<Vec<f64>>, Vec<f64>) {
        task.rows_in(split)
            .map(|r| (entity_rows[pos[&r.entity]].clone(), r.label))
            .unzip()
    };
    let (mut xt, yt) = take(Split::Train);
    let (mut xv, yv) = take(Split::Val);
    standardize(&mut xt, &mut xv);
    let metric = task.metric.name;
    let scored = match task.target {
        TargetKind::Regression => {
            let h = fit_head(&xt, &yt, head)?;
            score_metric(metric, &h.predict_all(&xv), &yv)
        }
        TargetKind::Classification { num_classes: 2 } => {
            let h = fit_head(&xt, &yt, head)?;
            let s = h.predict_all(&xv);
            let cut = if matches!(head, HeadKind::Lda) { 0.0 } else { 0.5 };
            match metric {
                MetricName::Accuracy => {
                    let hard: Vec<f64> = s.iter().map(|&v| (v >= cut) as u8 as f64).collect();
                    score_metric(metric, &hard, &yv)
                }
                _ => score_metric(metric, &s, &yv),
            }
        }
        TargetKind::Classification { num_classes } => {
            // one-vs-rest heads
            let mut per_class = Vec::with_capacity(num_classes);
            for k in 0..num_classes {
                let yk: Vec<f64> = yt.iter().map(|&y| (y as usize == k) as u8 as f64).collect();
                per_class.push(fit_head(&xt, &yk, head)?.predict_all(&xv));
            }
            match metric {
                MetricName::RocAuc => {
                    let aucs: Vec<f64> = (0..num_classes)
                        .filter_map(|k| {
                            let yk: Vec<f64> = yv.iter().map(|&y| (y as usize == k) as u8 as f64).collect();
                            roc_auc(&per_class[k], &yk).ok()
                        })
                        .collect();
                    if aucs.is_empty() {
                        return Err(SketchError::Metric("no class has both labels in val".into()));
                    }
                    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
                }
                _ => {
                    let argmax: Vec<f64> = (0..yv.len())
                        .map(|i| {
                            (0..num_classes)
                                .max_by(|&a, &b| per_class[a][i].total_cmp(&per_class[b][i]))
                                .unwrap_or(0) as f64
                        })
                        .collect();
                    score_metric(metric, &argmax, &yv)
                }
            }
        }
    };
    scored.map_err(|e| SketchError::Metric(e.to_string()))
}
