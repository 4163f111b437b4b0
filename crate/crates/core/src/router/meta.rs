use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::embedding::{check_registry, Normalizer, TaskEmbedding, BUDGET_FEATURE};
use super::RouterError;
use crate::bank::{winner, BankRecord, SelectBy};
use crate::Family;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetaKind {
    Knn { k: usize },
    Logistic,
}

impl Default for MetaKind {
    fn default() -> Self {
        MetaKind::Knn { k: 3 }
    }
}

/// One training example: a task (possibly at a given budget) and its winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaSample {
    pub embedding: TaskEmbedding,
    pub winner: Family,
    /// Signed relative gap, positive favoring rdl.
    #[serde(default)]
    pub margin: f64,
}

/// Pair each embedding with its bank winner; tasks without a winner are
/// returned separately with the reason.
pub fn samples_from_bank(
    records: &[BankRecord],
    embeddings: &[TaskEmbedding],
    by: SelectBy,
) -> (Vec<MetaSample>, BTreeMap<String, String>) {
    let mut out = Vec::new();
    let mut skipped = BTreeMap::new();
    for e in embeddings {
        match winner(records, &e.task, by) {
            Ok(w) => out.push(MetaSample { embedding: e.clone(), winner: w.family, margin: w.margin }),
            Err(err) => {
                skipped.insert(e.task.clone(), err.to_string());
            }
        }
    }
    (out, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetaModel {
    Knn { k: usize, points: Vec<Vec<f64>>, labels: Vec<Family>, tasks: Vec<String> },
    Logistic { weights: Vec<f64>, bias: f64, iterations: usize },
    /// Every training sample had the same winner.
    Constant(Family),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaClassifier {
    pub kind: MetaKind,
    pub normalizer: Normalizer,
    pub model: MetaModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub family: Family,
    pub confidence: f64,
    /// knn: neighbor task ids nearest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub neighbors: Vec<String>,
    /// logistic: largest-magnitude weights (positive favors rdl).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub top_weights: Vec<(String, f64)>,
    pub imputed: Vec<String>,
}

const LOGISTIC_L2: f64 = 1e-4;
const LOGISTIC_TOL: f64 = 1e-8;
const LOGISTIC_MAX_ITER: usize = 200;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Newton iterations on the L2-penalized logistic loss (bias unpenalized).
/// Label 1 is rdl.
fn fit_logistic(xs: &[Vec<f64>], ys: &[f64]) -> Result<(Vec<f64>, f64, usize), RouterError> {
    let n = xs.len();
    let p = xs[0].len() + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j + 1 == p { 1.0 } else { xs[i][j] });
    let y = DVector::from_column_slice(ys);
    let mut beta = DVector::zeros(p);
    for it in 1..=LOGISTIC_MAX_ITER {
        let mu = (&x * &beta).map(sigmoid);
        let mut grad = x.transpose() * (&mu - &y);
        let mut hess = DMatrix::zeros(p, p);
        for i in 0..n {
            let w = mu[i] * (1.0 - mu[i]);
            let row = x.row(i);
            hess += w * row.transpose() * row;
        }
        for j in 0..p - 1 {
            grad[j] += LOGISTIC_L2 * beta[j];
            hess[(j, j)] += LOGISTIC_L2;
        }
        // tiny ridge on the bias keeps the system solvable for separable data
        hess[(p - 1, p - 1)] += 1e-12;
        let step = hess.cholesky().ok_or(RouterError::SingularFit)?.solve(&grad);
        beta -= &step;
        if !beta.iter().all(|v| v.is_finite()) {
            return Err(RouterError::SingularFit);
        }
        if step.norm() <= LOGISTIC_TOL * (1.0 + beta.norm()) {
            return Ok((beta.rows(0, p - 1).iter().copied().collect(), beta[p - 1], it));
        }
    }
    Ok((beta.rows(0, p - 1).iter().copied().collect(), beta[p - 1], LOGISTIC_MAX_ITER))
}

pub fn fit_meta(samples: &[MetaSample], kind: MetaKind) -> Result<MetaClassifier, RouterError> {
    if samples.len() < 2 {
        return Err(RouterError::TooFewTasks(samples.len()));
    }
    if let MetaKind::Knn { k } = kind {
        if k == 0 || k % 2 == 0 {
            return Err(RouterError::InvalidConfig("knn k must be odd".into()));
        }
    }
    let families: BTreeSet<Family> = samples.iter().map(|s| s.winner).collect();
    if families.len() < 2 {
        return Err(RouterError::SingleFamilyBank);
    }
    let embs: Vec<TaskEmbedding> = samples.iter().map(|s| s.embedding.clone()).collect();
    let normalizer = Normalizer::fit(&embs)?;
    let xs: Vec<Vec<f64>> = embs
        .iter()
        .map(|e| normalizer.transform(e).map(|n| n.values))
        .collect::<Result<_, _>>()?;
    let model = match kind {
        MetaKind::Knn { k } => MetaModel::Knn {
            k,
            points: xs,
            labels: samples.iter().map(|s| s.winner).collect(),
            tasks: samples.iter().map(|s| s.embedding.task.clone()).collect(),
        },
        MetaKind::Logistic => {
            let ys: Vec<f64> = samples.iter().map(|s| (s.winner == Family::Rdl) as u8 as f64).collect();
            let (weights, bias, iterations) = fit_logistic(&xs, &ys)?;
            MetaModel::Logistic { weights, bias, iterations }
        }
    };
    Ok(MetaClassifier { kind, normalizer, model })
}

impl MetaClassifier {
    pub fn uses_budget(&self) -> bool {
        self.normalizer.names.iter().any(|n| n == BUDGET_FEATURE)
    }

    pub fn predict(&self, emb: &TaskEmbedding) -> Result<RouteDecision, RouterError> {
        check_registry(&self.normalizer.names, emb)?;
        let q = self.normalizer.transform(emb)?;
        let mut decision = RouteDecision {
            family: Family::Rdl,
            confidence: 1.0,
            neighbors: vec![],
            top_weights: vec![],
            imputed: q.imputed,
        };
        match &self.model {
            MetaModel::Constant(f) => decision.family = *f,
            MetaModel::Knn { k, points, labels, tasks } => {
                let mut dist: Vec<(f64, usize)> = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.iter().zip(&q.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
                    .collect();
                dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let near = &dist[..(*k).min(dist.len())];
                let exact = near.iter().any(|(d, _)| *d == 0.0);
                let weight = |d: f64| if exact { (d == 0.0) as u8 as f64 } else { 1.0 / d };
                let mut votes: BTreeMap<Family, f64> = BTreeMap::new();
                for &(d, i) in near {
                    *votes.entry(labels[i]).or_default() += weight(d);
                }
                let total: f64 = votes.values().sum();
                let rdl = votes.get(&Family::Rdl).copied().unwrap_or(0.0);
                let dfs = votes.get(&Family::Dfs).copied().unwrap_or(0.0);
                // ties go to rdl
                decision.family = if rdl >= dfs { Family::Rdl } else { Family::Dfs };
                decision.confidence = rdl.max(dfs) / total;
                decision.neighbors = near.iter().map(|&(_, i)| tasks[i].clone()).collect();
            }
            MetaModel::Logistic { weights, bias, .. } => {
                let p = sigmoid(bias + weights.iter().zip(&q.values).map(|(w, x)| w * x).sum::<f64>());
                decision.family = if p >= 0.5 { Family::Rdl } else { Family::Dfs };
                decision.confidence = p.max(1.0 - p);
                let mut ws: Vec<(String, f64)> =
                    self.normalizer.names.iter().cloned().zip(weights.iter().copied()).collect();
                ws.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
                ws.truncate(3);
                decision.top_weights = ws;
            }
        }
        Ok(decision)
    }
}

/// Predict with the budget feature set iff the classifier was trained
/// with one.
pub fn route(meta: &MetaClassifier, emb: &TaskEmbedding, budget: Option<f64>) -> Result<RouteDecision, RouterError> {
    match (meta.uses_budget(), budget) {
        (true, Some(b)) => meta.predict(&emb.with_budget(b)),
        (false, None) => meta.predict(emb),
        (true, None) => Err(RouterError::BudgetMismatch("classifier expects a budget".into())),
        (false, Some(_)) => Err(RouterError::BudgetMismatch("classifier was trained without a budget".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooItem {
    pub task: String,
    pub truth: Family,
    pub predicted: Family,
    pub confidence: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooReport {
    pub accuracy: f64,
    pub majority_rate: f64,
    pub items: Vec<LooItem>,
    pub errors: Vec<LooItem>,
}

/// Leave-one-task-out: every sample of the held-out task id is removed
/// (with normalization refit). A fold whose training winners are all one
/// family predicts that family.
pub fn loo_eval(samples: &[MetaSample], kind: MetaKind) -> Result<LooReport, RouterError> {
    let tasks: BTreeSet<&str> = samples.iter().map(|s| s.embedding.task.as_str()).collect();
    if tasks.len() < 3 {
        return Err(RouterError::TooFewTasks(tasks.len()));
    }
    if samples.iter().map(|s| s.winner).collect::<BTreeSet<_>>().len() < 2 {
        return Err(RouterError::SingleFamilyBank);
    }
    let folds: Vec<&str> = tasks.into_iter().collect();
    let per_fold: Vec<Vec<LooItem>> = folds
        .par_iter()
        .map(|&held| -> Result<Vec<LooItem>, RouterError> {
            let train: Vec<MetaSample> = samples.iter().filter(|s| s.embedding.task != held).cloned().collect();
            let meta = match fit_meta(&train, kind) {
                Err(RouterError::SingleFamilyBank) => MetaClassifier {
                    kind,
                    normalizer: Normalizer::fit(&train.iter().map(|s| s.embedding.clone()).collect::<Vec<_>>())?,
                    model: MetaModel::Constant(train[0].winner),
                },
                other => other?,
            };
            samples
                .iter()
                .filter(|s| s.embedding.task == held)
                .map(|s| {
                    let d = meta.predict(&s.embedding)?;
                    Ok(LooItem {
                        task: held.to_string(),
                        truth: s.winner,
                        predicted: d.family,
                        confidence: d.confidence,
                        margin: s.margin,
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let items: Vec<LooItem> = per_fold.into_iter().flatten().collect();
    let hits = items.iter().filter(|i| i.truth == i.predicted).count();
    let rdl = items.iter().filter(|i| i.truth == Family::Rdl).count();
    let n = items.len() as f64;
    Ok(LooReport {
        accuracy: hits as f64 / n,
        majority_rate: rdl.max(items.len() - rdl) as f64 / n,
        errors: items.iter().filter(|i| i.truth != i.predicted).cloned().collect(),
        items,
    })
}
