use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RouterError;
use crate::hashing::derive_rng;
use crate::rdb::{RelGraph, Split, TaskTable};
use crate::sketch::TypedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walks: usize,
    pub length: usize,
    pub max_seeds: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { walks: 20, length: 4, max_seeds: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkFeatures {
    pub mean_same_class_ratio_ignore: Option<f64>,
    pub adjusted_mean_same_class_ratio: Option<f64>,
    pub sparsity_ratio: f64,
    pub mean_past_task_nodes: f64,
}

/// Discrete class of a label: class index for classification, above/below
/// the train median for regression.
fn class_map(task: &TaskTable) -> impl Fn(f64) -> usize {
    let median = if task.target.is_classification() {
        None
    } else {
        let mut ys: Vec<f64> = task.rows_in(Split::Train).map(|r| r.label).collect();
        ys.sort_by(f64::total_cmp);
        ys.get(ys.len() / 2).copied()
    };
    move |y: f64| match median {
        None => y as usize,
        Some(m) => (y > m) as usize,
    }
}

struct SeedStats {
    ratio: Option<(f64, usize)>,
    empty_walks: usize,
    past_nodes: usize,
}

/// Random-walk label agreement. From each train row (subsampled to
/// `max_seeds`) run `walks` uniform walks of `length` steps over `graph`;
/// entity nodes other than the seed's own entity whose train history has a
/// row strictly before the seed's timestamp are "past" nodes, carrying the
/// class of their latest such row.
pub fn walk_features(graph: &RelGraph, task: &TaskTable, cfg: &WalkConfig) -> Result<WalkFeatures, RouterError> {
    if cfg.walks == 0 || cfg.length == 0 {
        return Err(RouterError::InvalidConfig("walks and length must be at least 1".into()));
    }
    let etype = graph
        .node_type_index(&task.entity_table)
        .ok_or_else(|| RouterError::InvalidConfig(format!("unknown entity table `{}`", task.entity_table)))?;
    let tg = TypedGraph::from_rel(graph);
    let base = tg.type_offset(etype);
    let count = tg.type_count(etype);
    let class_of = class_map(task);

    let mut history: BTreeMap<usize, Vec<(i64, usize)>> = BTreeMap::new();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let train: Vec<_> = task.rows_in(Split::Train).collect();
    for r in &train {
        let c = class_of(r.label);
        history.entry(r.entity).or_default().push((r.timestamp, c));
        *counts.entry(c).or_default() += 1;
    }
    let prior: BTreeMap<usize, f64> = counts.into_iter().map(|(c, k)| (c, k as f64 / train.len() as f64)).collect();
    for h in history.values_mut() {
        h.sort();
    }
    // latest class strictly before `t`
    let past_class = |entity: usize, t: i64| -> Option<usize> {
        let h = history.get(&entity)?;
        let k = h.partition_point(|&(ts, _)| ts < t);
        (k > 0).then(|| h[k - 1].1)
    };

    let mut seeds: Vec<usize> = (0..train.len()).collect();
    if seeds.len() > cfg.max_seeds {
        seeds.shuffle(&mut derive_rng(cfg.seed, &[u64::MAX]));
        seeds.truncate(cfg.max_seeds);
        seeds.sort_unstable();
    }

    let stats: Vec<(usize, SeedStats)> = seeds
        .par_iter()
        .map(|&k| {
            let row = train[k];
            let mut rng = derive_rng(cfg.seed, &[k as u64]);
            let seed_class = class_of(row.label);
            let (mut same, mut total, mut empty, mut past_nodes) = (0usize, 0usize, 0usize, 0usize);
            for _ in 0..cfg.walks {
                let mut at = base + row.entity;
                let mut seen = BTreeSet::new();
                for _ in 0..cfg.length {
                    let Some(&(next, _)) = tg.out_edges(at).choose(&mut rng) else { break };
                    at = next as usize;
                    if at < base || at >= base + count || at - base == row.entity {
                        continue;
                    }
                    if let Some(c) = past_class(at - base, row.timestamp) {
                        if seen.insert(at) {
                            total += 1;
                            same += (c == seed_class) as usize;
                        }
                    }
                }
                past_nodes += seen.len();
                empty += seen.is_empty() as usize;
            }
            let ratio = (total > 0).then(|| (same as f64 / total as f64, seed_class));
            (k, SeedStats { ratio, empty_walks: empty, past_nodes })
        })
        .collect();

    let n_walks = (seeds.len() * cfg.walks) as f64;
    let ratios: Vec<(f64, usize)> = stats.iter().filter_map(|(_, s)| s.ratio).collect();
    let mean_ratio = (!ratios.is_empty()).then(|| ratios.iter().map(|r| r.0).sum::<f64>() / ratios.len() as f64);
    let adjusted = (!ratios.is_empty())
        .then(|| ratios.iter().map(|&(r, c)| r - prior[&c]).sum::<f64>() / ratios.len() as f64);
    let empty: usize = stats.iter().map(|(_, s)| s.empty_walks).sum();
    let past: usize = stats.iter().map(|(_, s)| s.past_nodes).sum();
    Ok(WalkFeatures {
        mean_same_class_ratio_ignore: mean_ratio,
        adjusted_mean_same_class_ratio: adjusted,
        sparsity_ratio: if n_walks > 0.0 { empty as f64 / n_walks } else { 1.0 },
        mean_past_task_nodes: if n_walks > 0.0 { past as f64 / n_walks } else { 0.0 },
    })
}
