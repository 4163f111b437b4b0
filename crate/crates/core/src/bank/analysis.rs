use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kendall::kendall_tau;
use super::record::{default_exclude, BankRecord, ConfigSignature};
use super::BankError;
use crate::Family;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectBy {
    Val,
    Test,
}

impl FromStr for SelectBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "val" => Ok(SelectBy::Val),
            "test" => Ok(SelectBy::Test),
            other => Err(format!("unknown selection `{other}` (expected val|test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Winner {
    pub task: String,
    pub family: Family,
    /// `(rdl − dfs) / |dfs|` on oriented test scores of the representatives
    /// (absolute gap when the dfs score is 0). Positive favors rdl.
    pub margin: f64,
    pub by: SelectBy,
    /// Per family: test score of the representative record.
    pub test_scores: BTreeMap<Family, f64>,
}

/// Direction shared by all records of `task`.
fn task_direction(records: &[&BankRecord], task: &str) -> Result<bool, BankError> {
    let first = records.first().ok_or_else(|| BankError::UnknownTask(task.to_string()))?;
    if records.iter().any(|r| r.higher_is_better != first.higher_is_better) {
        return Err(BankError::InconsistentDirection(task.to_string()));
    }
    Ok(first.higher_is_better)
}

/// Per family, the record maximizing the oriented `by` score (first in bank
/// order on ties); the winner has the better representative test score, ties
/// going to rdl.
pub fn winner(records: &[BankRecord], task: &str, by: SelectBy) -> Result<Winner, BankError> {
    let rows: Vec<&BankRecord> = records.iter().filter(|r| r.task == task).collect();
    let higher = task_direction(&rows, task)?;
    let mut reps: BTreeMap<Family, &BankRecord> = BTreeMap::new();
    for r in &rows {
        let key = |x: &BankRecord| x.oriented(if by == SelectBy::Val { x.val_score } else { x.test_score });
        match reps.get(&r.family) {
            Some(best) if key(best) >= key(r) => {}
            _ => {
                reps.insert(r.family, r);
            }
        }
    }
    let (Some(rdl), Some(dfs)) = (reps.get(&Family::Rdl), reps.get(&Family::Dfs)) else {
        return Err(BankError::IncompleteTask(task.to_string()));
    };
    let sign = if higher { 1.0 } else { -1.0 };
    let gap = sign * (rdl.test_score - dfs.test_score);
    let margin = if dfs.test_score != 0.0 { gap / dfs.test_score.abs() } else { gap };
    Ok(Winner {
        task: task.to_string(),
        family: if gap >= 0.0 { Family::Rdl } else { Family::Dfs },
        margin,
        by,
        test_scores: reps.iter().map(|(f, r)| (*f, r.test_score)).collect(),
    })
}

pub fn tasks(records: &[BankRecord]) -> Vec<String> {
    records.iter().map(|r| r.task.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Winner of every task in the bank; tasks that fail are reported in the
/// second map.
pub fn winners(records: &[BankRecord], by: SelectBy) -> (BTreeMap<String, Winner>, BTreeMap<String, String>) {
    let mut ok = BTreeMap::new();
    let mut failed = BTreeMap::new();
    for t in tasks(records) {
        match winner(records, &t, by) {
            Ok(w) => {
                ok.insert(t, w);
            }
            Err(e) => {
                failed.insert(t, e.to_string());
            }
        }
    }
    (ok, failed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityOptions {
    pub exclude: BTreeSet<String>,
    pub min_shared: usize,
}

impl Default for SimilarityOptions {
    fn default() -> Self {
        Self { exclude: default_exclude(), min_shared: 2 }
    }
}

/// Symmetric task-by-task similarity; `None` marks pairs without enough
/// shared configurations or with a degenerate ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub tasks: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl SimilarityMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.tasks.iter().position(|t| t == a)?;
        let j = self.tasks.iter().position(|t| t == b)?;
        self.values[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityReport {
    pub matrix: SimilarityMatrix,
    pub diagnostics: Vec<String>,
}

/// Oriented test score per signature for each task; records sharing a
/// signature (e.g. differing only in seed) are averaged.
pub fn signature_scores(
    records: &[BankRecord],
    exclude: &BTreeSet<String>,
) -> Result<BTreeMap<String, BTreeMap<ConfigSignature, f64>>, BankError> {
    let mut sums: BTreeMap<String, BTreeMap<ConfigSignature, (f64, usize)>> = BTreeMap::new();
    for t in tasks(records) {
        let rows: Vec<&BankRecord> = records.iter().filter(|r| r.task == t).collect();
        task_direction(&rows, &t)?;
    }
    for r in records {
        // family-tagged so rdl and dfs configs never collide
        let sig = ConfigSignature(format!("{}|{}", r.family, ConfigSignature::new(&r.config, exclude).0));
        let e = sums.entry(r.task.clone()).or_default().entry(sig).or_default();
        e.0 += r.oriented(r.test_score);
        e.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(t, m)| (t, m.into_iter().map(|(s, (v, n))| (s, v / n as f64)).collect()))
        .collect())
}

/// Kendall tau-b between per-task rankings of shared configurations.
pub fn graphgym_similarity(records: &[BankRecord], opts: &SimilarityOptions) -> Result<SimilarityReport, BankError> {
    let scores = signature_scores(records, &opts.exclude)?;
    let names: Vec<String> = scores.keys().cloned().collect();
    let n = names.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let results: Vec<(usize, usize, Result<f64, String>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&scores[&names[i]], &scores[&names[j]]);
            let shared: Vec<&ConfigSignature> = a.keys().filter(|k| b.contains_key(*k)).collect();
            if shared.len() < opts.min_shared {
                return (i, j, Err(format!("{} shared configs", shared.len())));
            }
            let x: Vec<f64> = shared.iter().map(|k| a[*k]).collect();
            let y: Vec<f64> = shared.iter().map(|k| b[*k]).collect();
            (i, j, kendall_tau(&x, &y).map_err(|e| e.to_string()))
        })
        .collect();
    let mut values = vec![vec![None; n]; n];
    let mut diagnostics = Vec::new();
    for (i, row) in values.iter_mut().enumerate() {
        row[i] = Some(1.0);
    }
    for (i, j, r) in results {
        match r {
            Ok(v) => {
                values[i][j] = Some(v);
                values[j][i] = Some(v);
            }
            Err(why) => diagnostics.push(format!("{} vs {}: {why}", names[i], names[j])),
        }
    }
    Ok(SimilarityReport { matrix: SimilarityMatrix { tasks: names, values }, diagnostics })
}
