use serde::{Deserialize, Serialize};

use super::embedding::{embedding_similarity, similarity_agreement, NormalizedEmbedding};
use super::RouterError;
use crate::bank::SimilarityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub margin: f64,
    pub steps: usize,
    pub step_size: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { margin: 0.1, steps: 200, step_size: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    /// Row-major square map applied as `g · x`.
    pub g: Vec<Vec<f64>>,
    pub triplets: usize,
    pub loss_before: f64,
    pub loss_after: f64,
    pub agreement_before: Option<f64>,
    pub agreement_after: Option<f64>,
}

pub fn apply(g: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    g.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// Cosine of `u`, `v` with its gradients in `u` and `v`; zero when either
/// vector vanishes.
fn cos_grad(u: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return (0.0, vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    let c = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv);
    let du = u.iter().zip(v).map(|(a, b)| b / (nu * nv) - c * a / (nu * nu)).collect();
    let dv = u.iter().zip(v).map(|(a, b)| a / (nu * nv) - c * b / (nv * nv)).collect();
    (c, du, dv)
}

/// Anchor/positive/negative index triplets where the ground truth ranks the
/// positive strictly above the negative for that anchor.
pub fn triplets(gt: &SimilarityMatrix, order: &[usize]) -> Vec<(usize, usize, usize)> {
    let n = order.len();
    let mut out = Vec::new();
    for a in 0..n {
        for p in 0..n {
            for q in 0..n {
                if a == p || a == q || p == q {
                    continue;
                }
                if let (Some(sp), Some(sq)) = (gt.values[order[a]][order[p]], gt.values[order[a]][order[q]]) {
                    if sp > sq {
                        out.push((a, p, q));
                    }
                }
            }
        }
    }
    out
}

fn loss_and_grad(g: &[Vec<f64>], xs: &[Vec<f64>], trips: &[(usize, usize, usize)], margin: f64) -> (f64, Vec<Vec<f64>>) {
    let d = g.len();
    let proj: Vec<Vec<f64>> = xs.iter().map(|x| apply(g, x)).collect();
    let mut grad = vec![vec![0.0; d]; d];
    let mut loss = 0.0;
    let add = |coef: f64, dz: &[f64], x: &[f64], grad: &mut Vec<Vec<f64>>| {
        for r in 0..d {
            for c in 0..d {
                grad[r][c] += coef * dz[r] * x[c];
            }
        }
    };
    for &(a, p, q) in trips {
        let (cp, dap, dpp) = cos_grad(&proj[a], &proj[p]);
        let (cn, dan, dnn) = cos_grad(&proj[a], &proj[q]);
        let l = margin - cp + cn;
        if l <= 0.0 {
            continue;
        }
        loss += l;
        add(-1.0, &dap, &xs[a], &mut grad);
        add(-1.0, &dpp, &xs[p], &mut grad);
        add(1.0, &dan, &xs[a], &mut grad);
        add(1.0, &dnn, &xs[q], &mut grad);
    }
    let m = trips.len().max(1) as f64;
    grad.iter_mut().flatten().for_each(|v| *v /= m);
    (loss / m, grad)
}

const MAX_HALVINGS: usize = 30;

fn agreement(embs: &[NormalizedEmbedding], g: &[Vec<f64>], gt: &SimilarityMatrix) -> Option<f64> {
    let projected: Vec<NormalizedEmbedding> = embs
        .iter()
        .map(|e| NormalizedEmbedding { values: apply(g, &e.values), ..e.clone() })
        .collect();
    let (sim, _) = embedding_similarity(&projected);
    similarity_agreement(&sim, gt).ok().map(|r| r.mean)
}

/// Gradient descent on the mean triplet margin-ranking loss of cosine
/// similarities under `x ↦ g·x`, starting from the identity.
pub fn train_projection(
    embs: &[NormalizedEmbedding],
    gt: &SimilarityMatrix,
    cfg: &ProjectionConfig,
) -> Result<ProjectionResult, RouterError> {
    if embs.len() < 3 {
        return Err(RouterError::TooFewTasks(embs.len()));
    }
    let order: Vec<usize> = embs
        .iter()
        .map(|e| gt.tasks.iter().position(|t| *t == e.task).ok_or(RouterError::TaskSetMismatch))
        .collect::<Result<_, _>>()?;
    let d = embs[0].values.len();
    let xs: Vec<Vec<f64>> = embs.iter().map(|e| e.values.clone()).collect();
    let trips = triplets(gt, &order);
    let mut g: Vec<Vec<f64>> = (0..d).map(|r| (0..d).map(|c| (r == c) as u8 as f64).collect()).collect();
    let agreement_before = agreement(embs, &g, gt);
    let (loss_before, mut grad) = loss_and_grad(&g, &xs, &trips, cfg.margin);
    let mut loss = loss_before;
    let mut step = cfg.step_size;
    for _ in 0..cfg.steps {
        if grad.iter().flatten().all(|&v| v == 0.0) {
            break;
        }
        let mut halvings = 0;
        loop {
            let cand: Vec<Vec<f64>> = g
                .iter()
                .zip(&grad)
                .map(|(row, gr)| row.iter().zip(gr).map(|(a, b)| a - step * b).collect())
                .collect();
            let (l, gr) = loss_and_grad(&cand, &xs, &trips, cfg.margin);
            if l.is_finite() && cand.iter().flatten().all(|v| v.is_finite()) {
                g = cand;
                loss = l;
                grad = gr;
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(RouterError::DivergedProjection);
            }
            step /= 2.0;
        }
    }
    Ok(ProjectionResult {
        agreement_after: agreement(embs, &g, gt),
        g,
        triplets: trips.len(),
        loss_before,
        loss_after: loss,
        agreement_before,
    })
}
