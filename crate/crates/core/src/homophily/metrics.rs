use rand::seq::SliceRandom;
use serde::Serialize;

use super::HomophilyError;
use crate::hashing::derive_rng;
use crate::rdb::{EntityLabelSummary, ProjectedEdges, TargetKind};

/// Label kernel `K(ŷ_u, ŷ_v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LabelKernel {
    Dot,
    /// Standardized product `(a − μ)(b − μ)/σ²` with `μ`, `σ²` over labeled nodes.
    Pearson { mu: f64, var: f64 },
}

impl LabelKernel {
    /// Dot for classification, Pearson (statistics over all summary
    /// entries) for regression.
    pub fn for_summary(summary: &EntityLabelSummary) -> Result<Self, HomophilyError> {
        match summary.target {
            TargetKind::Classification { .. } => Ok(LabelKernel::Dot),
            TargetKind::Regression => {
                let vals: Vec<f64> = summary.entries.values().map(|e| e.mean[0]).collect();
                let n = vals.len() as f64;
                if vals.is_empty() {
                    return Err(HomophilyError::DegenerateLabels);
                }
                let mu = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
                if var <= 0.0 || !var.is_finite() {
                    return Err(HomophilyError::DegenerateLabels);
                }
                Ok(LabelKernel::Pearson { mu, var })
            }
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            LabelKernel::Dot => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            LabelKernel::Pearson { mu, var } => (a[0] - mu) * (b[0] - mu) / var,
        }
    }
}

/// How projected edges are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Each deduplicated pair counts once.
    #[default]
    Unweighted,
    /// Each pair counts by its witness multiplicity.
    Witness,
}

/// Directed entries whose endpoints are both labeled, with their weights.
#[derive(Debug, Clone)]
pub struct LabeledEdges<'a> {
    pub entries: Vec<(&'a [f64], &'a [f64], u32, f64)>,
    /// Directed entries dropped for an unlabeled endpoint.
    pub skipped: usize,
}

impl<'a> LabeledEdges<'a> {
    pub fn new(edges: &ProjectedEdges, summary: &'a EntityLabelSummary, weighting: Weighting) -> Self {
        let mut entries = Vec::with_capacity(edges.len());
        let mut skipped = 0;
        for e in &edges.edges {
            match (summary.get(e.u), summary.get(e.v)) {
                (Some(a), Some(b)) => {
                    let w = match weighting {
                        Weighting::Unweighted => 1.0,
                        Weighting::Witness => e.weight as f64,
                    };
                    entries.push((a, b, e.u, w));
                }
                _ => skipped += 1,
            }
        }
        Self { entries, skipped }
    }

    fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.3).sum()
    }
}

fn ensure_nonempty(view: &LabeledEdges) -> Result<f64, HomophilyError> {
    let w = view.total_weight();
    if view.entries.is_empty() || w <= 0.0 {
        Err(HomophilyError::NoLabeledEdges)
    } else {
        Ok(w)
    }
}

/// Number of unordered pairs skipped because an endpoint has no label.
pub fn skipped_pairs(edges: &ProjectedEdges, summary: &EntityLabelSummary) -> usize {
    LabeledEdges::new(edges, summary, Weighting::Unweighted).skipped / 2
}

pub fn edge_homophily(
    edges: &ProjectedEdges,
    summary: &EntityLabelSummary,
    kernel: LabelKernel,
) -> Result<f64, HomophilyError> {
    edge_homophily_of(&LabeledEdges::new(edges, summary, Weighting::Unweighted), kernel)
}

pub fn edge_homophily_of(view: &LabeledEdges, kernel: LabelKernel) -> Result<f64, HomophilyError> {
    let total = ensure_nonempty(view)?;
    let s: f64 = view.entries.iter().map(|(a, b, _, w)| w * kernel.eval(a, b)).sum();
    Ok(s / total)
}

pub fn adjusted_homophily(
    edges: &ProjectedEdges,
    summary: &EntityLabelSummary,
) -> Result<f64, HomophilyError> {
    adjusted_homophily_of(&LabeledEdges::new(edges, summary, Weighting::Unweighted), summary)
}

/// Chance-corrected dot-kernel homophily with soft class degree mass
/// `D_k = Σ (ŷ_{u,k} + ŷ_{v,k})`.
pub fn adjusted_homophily_of(
    view: &LabeledEdges,
    summary: &EntityLabelSummary,
) -> Result<f64, HomophilyError> {
    if !summary.target.is_classification() {
        return Err(HomophilyError::NotClassification);
    }
    let total = ensure_nonempty(view)?;
    let h = edge_homophily_of(view, LabelKernel::Dot)?;
    let mut d = vec![0.0; summary.dim()];
    for (a, b, _, w) in &view.entries {
        for k in 0..d.len() {
            d[k] += w * (a[k] + b[k]);
        }
    }
    let expected: f64 = d.iter().map(|dk| (dk / (2.0 * total)).powi(2)).sum();
    let denom = 1.0 - expected;
    if denom.abs() <= 1e-12 {
        return Err(HomophilyError::DegenerateClassMass);
    }
    Ok((h - expected) / denom)
}

/// Mean label vector over all labeled entities.
pub fn class_prior(summary: &EntityLabelSummary) -> Vec<f64> {
    let mut p = vec![0.0; summary.dim()];
    for e in summary.entries.values() {
        for (pk, yk) in p.iter_mut().zip(&e.mean) {
            *pk += yk;
        }
    }
    let n = summary.len().max(1) as f64;
    p.iter_mut().for_each(|x| *x /= n);
    p
}

pub fn class_insensitive_homophily(
    edges: &ProjectedEdges,
    summary: &EntityLabelSummary,
    prior: &[f64],
) -> Result<f64, HomophilyError> {
    class_insensitive_homophily_of(&LabeledEdges::new(edges, summary, Weighting::Unweighted), summary, prior)
}

/// `(1/(C−1)) Σ_k [h_k − π_k]_+`; equals edge homophily for regression.
/// Classes with zero endpoint mass are skipped.
pub fn class_insensitive_homophily_of(
    view: &LabeledEdges,
    summary: &EntityLabelSummary,
    prior: &[f64],
) -> Result<f64, HomophilyError> {
    let c = match summary.target {
        TargetKind::Regression => {
            let kernel = LabelKernel::for_summary(summary)?;
            return edge_homophily_of(view, kernel);
        }
        TargetKind::Classification { num_classes } => num_classes,
    };
    if c < 2 {
        return Err(HomophilyError::DegenerateClassMass);
    }
    ensure_nonempty(view)?;
    let mut num = vec![0.0; c];
    let mut den = vec![0.0; c];
    for (a, b, _, w) in &view.entries {
        let kv = LabelKernel::Dot.eval(a, b);
        for k in 0..c {
            num[k] += w * kv * b[k];
            den[k] += w * b[k];
        }
    }
    let s: f64 = (0..c)
        .filter(|&k| den[k] > 0.0)
        .map(|k| (num[k] / den[k] - prior[k]).max(0.0))
        .sum();
    Ok(s / (c - 1) as f64)
}

pub fn aggregation_homophily(
    edges: &ProjectedEdges,
    summary: &EntityLabelSummary,
    kernel: LabelKernel,
) -> Result<f64, HomophilyError> {
    aggregation_homophily_of(&LabeledEdges::new(edges, summary, Weighting::Unweighted), kernel)
}

/// Mean over nodes with labeled neighbors of `K(ŷ_u, ȳ_u)`, where `ȳ_u` is
/// the (weighted) mean label of `u`'s labeled neighbors.
pub fn aggregation_homophily_of(view: &LabeledEdges, kernel: LabelKernel) -> Result<f64, HomophilyError> {
    ensure_nonempty(view)?;
    let dim = view.entries[0].0.len();
    let mut total = 0.0;
    let mut nodes = 0usize;
    let mut acc = vec![0.0; dim];
    let mut i = 0;
    // entries arrive grouped by source node
    while i < view.entries.len() {
        let (yu, _, u, _) = view.entries[i];
        acc.iter_mut().for_each(|x| *x = 0.0);
        let mut wsum = 0.0;
        while i < view.entries.len() && view.entries[i].2 == u {
            let (_, yv, _, w) = view.entries[i];
            for (a, b) in acc.iter_mut().zip(yv) {
                *a += w * b;
            }
            wsum += w;
            i += 1;
        }
        acc.iter_mut().for_each(|x| *x /= wsum);
        total += kernel.eval(yu, &acc);
        nodes += 1;
    }
    Ok(total / nodes as f64)
}

/// Adjusted homophily under `shuffles` random permutations of the label
/// vectors among labeled entities.
pub fn label_shuffle_adjusted(
    edges: &ProjectedEdges,
    summary: &EntityLabelSummary,
    shuffles: usize,
    seed: u64,
) -> Vec<f64> {
    let keys: Vec<u32> = summary.entries.keys().copied().collect();
    let values: Vec<Vec<f64>> = summary.entries.values().map(|e| e.mean.clone()).collect();
    (0..shuffles)
        .filter_map(|i| {
            let mut rng = derive_rng(seed, &[0x5348_5546, i as u64]);
            let mut perm = values.clone();
            perm.shuffle(&mut rng);
            let shuffled = EntityLabelSummary::from_means(summary.target, keys.iter().copied().zip(perm));
            adjusted_homophily(edges, &shuffled).ok()
        })
        .collect()
}
