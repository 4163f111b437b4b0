use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::walks::WalkFeatures;
use super::RouterError;
use crate::bank::{kendall_tau, SimilarityMatrix};
use crate::homophily::HomophilyProfile;
use crate::sketch::AffinityReport;

/// Bumped whenever feature names or order change.
pub const REGISTRY_VERSION: u32 = 1;

pub const BASE_FEATURES: [&str; 12] = [
    "h_adjs_corr_mean",
    "h_adjs_corr_max",
    "h_adjs_corr_min",
    "h_adjs_corr_mode",
    "h_adjs_corr_weighted_mean",
    "lag1_autocorr_corr",
    "lag2_autocorr_corr",
    "mean_same_class_ratio_ignore",
    "adjusted_mean_same_class_ratio",
    "sparsity_ratio",
    "mean_past_task_nodes",
    "log_total_rows",
];

pub const HEURISTIC_FEATURE: &str = "entity_mean_val";

pub const PROBE_FEATURES: [&str; 8] = [
    "rfr_randomsage_1",
    "rfr_randomsage_2",
    "rfr_randomsage_3",
    "rfr_randomnbfnet_1",
    "rfr_randomnbfnet_2",
    "rfr_randomnbfnet_3",
    "feat_affinity_1hop",
    "feat_affinity_2hop",
];

pub const BUDGET_FEATURE: &str = "budget";

/// Ordered feature names: the 12 base features, then the optional
/// heuristic, probe and budget groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRegistry {
    pub version: u32,
    pub names: Vec<String>,
}

impl FeatureRegistry {
    pub fn new(heuristic: bool, probes: bool, budget: bool) -> Self {
        let mut names: Vec<String> = BASE_FEATURES.iter().map(|s| s.to_string()).collect();
        if heuristic {
            names.push(HEURISTIC_FEATURE.into());
        }
        if probes {
            names.extend(PROBE_FEATURES.iter().map(|s| s.to_string()));
        }
        if budget {
            names.push(BUDGET_FEATURE.into());
        }
        Self { version: REGISTRY_VERSION, names }
    }

    pub fn has_budget(&self) -> bool {
        self.names.iter().any(|n| n == BUDGET_FEATURE)
    }
}

/// Raw (unnormalized) embedding; `None` marks a missing feature, listed in
/// `imputed` because it will take the bank mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEmbedding {
    pub task: String,
    pub registry_version: u32,
    pub features: IndexMap<String, Option<f64>>,
    #[serde(default)]
    pub imputed: Vec<String>,
}

impl TaskEmbedding {
    pub fn new(task: impl Into<String>, features: IndexMap<String, Option<f64>>) -> Self {
        let features: IndexMap<String, Option<f64>> =
            features.into_iter().map(|(k, v)| (k, v.filter(|x| x.is_finite()))).collect();
        let imputed = features.iter().filter(|(_, v)| v.is_none()).map(|(k, _)| k.clone()).collect();
        Self { task: task.into(), registry_version: REGISTRY_VERSION, features, imputed }
    }

    pub fn names(&self) -> Vec<String> {
        self.features.keys().cloned().collect()
    }

    pub fn registry(&self) -> FeatureRegistry {
        FeatureRegistry { version: self.registry_version, names: self.names() }
    }

    /// Copy with the budget feature set (appended when absent).
    pub fn with_budget(&self, budget: f64) -> Self {
        let mut f = self.features.clone();
        f.insert(BUDGET_FEATURE.into(), Some(budget));
        Self::new(self.task.clone(), f)
    }
}

/// Inputs gathered by the profiler for one task; absent parts become
/// missing features.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingInputs<'a> {
    pub profile: Option<&'a HomophilyProfile>,
    pub lag1: Option<f64>,
    pub lag2: Option<f64>,
    pub walks: Option<&'a WalkFeatures>,
    pub train_rows: usize,
    pub val_rows: usize,
    /// Some(score or None) when the heuristic group is in the registry.
    pub entity_mean: Option<Option<f64>>,
    pub probes: Option<&'a AffinityReport>,
    pub budget: Option<f64>,
}

pub fn assemble_embedding(task: &str, inp: &EmbeddingInputs<'_>) -> TaskEmbedding {
    let reg = FeatureRegistry::new(inp.entity_mean.is_some(), inp.probes.is_some(), inp.budget.is_some());
    let agg = inp.profile.and_then(|p| p.aggregate("h_adjs_corr"));
    let walk = |f: fn(&WalkFeatures) -> Option<f64>| inp.walks.and_then(f);
    let mut features = IndexMap::new();
    for name in &reg.names {
        let v = match name.as_str() {
            "h_adjs_corr_mean" => agg.map(|a| a.mean),
            "h_adjs_corr_max" => agg.map(|a| a.max),
            "h_adjs_corr_min" => agg.map(|a| a.min),
            "h_adjs_corr_mode" => agg.map(|a| a.mode),
            "h_adjs_corr_weighted_mean" => agg.map(|a| a.weighted_mean),
            "lag1_autocorr_corr" => inp.lag1,
            "lag2_autocorr_corr" => inp.lag2,
            "mean_same_class_ratio_ignore" => walk(|w| w.mean_same_class_ratio_ignore),
            "adjusted_mean_same_class_ratio" => walk(|w| w.adjusted_mean_same_class_ratio),
            "sparsity_ratio" => walk(|w| Some(w.sparsity_ratio)),
            "mean_past_task_nodes" => walk(|w| Some(w.mean_past_task_nodes)),
            "log_total_rows" => Some((1.0 + (inp.train_rows + inp.val_rows) as f64).ln()),
            HEURISTIC_FEATURE => inp.entity_mean.flatten(),
            BUDGET_FEATURE => inp.budget,
            probe => inp.probes.and_then(|p| p.scores.get(probe).copied().flatten()),
        };
        features.insert(name.clone(), v);
    }
    TaskEmbedding::new(task, features)
}

/// Per-feature statistics fitted on a bank of embeddings. Missing values
/// are imputed with the mean over present values; the standard deviation
/// (population) is taken after imputation, and constant features keep a
/// scale of 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedEmbedding {
    pub task: String,
    pub values: Vec<f64>,
    pub imputed: Vec<String>,
}

pub(crate) fn check_registry(names: &[String], emb: &TaskEmbedding) -> Result<(), RouterError> {
    if emb.features.keys().ne(names.iter()) {
        return Err(RouterError::RegistryMismatch(emb.task.clone()));
    }
    Ok(())
}

impl Normalizer {
    pub fn fit(bank: &[TaskEmbedding]) -> Result<Self, RouterError> {
        let first = bank.first().ok_or(RouterError::TooFewTasks(0))?;
        let names = first.names();
        for e in bank {
            check_registry(&names, e)?;
        }
        let n = bank.len() as f64;
        let mut mean = Vec::with_capacity(names.len());
        let mut std = Vec::with_capacity(names.len());
        for j in 0..names.len() {
            let present: Vec<f64> = bank.iter().filter_map(|e| e.features[j]).collect();
            let m = if present.is_empty() { 0.0 } else { present.iter().sum::<f64>() / present.len() as f64 };
            let var = present.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            mean.push(m);
            std.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Ok(Self { names, mean, std })
    }

    pub fn transform(&self, emb: &TaskEmbedding) -> Result<NormalizedEmbedding, RouterError> {
        check_registry(&self.names, emb)?;
        let mut imputed = Vec::new();
        let values = emb
            .features
            .iter()
            .enumerate()
            .map(|(j, (name, v))| match v {
                Some(x) => (x - self.mean[j]) / self.std[j],
                None => {
                    imputed.push(name.clone());
                    0.0
                }
            })
            .collect();
        Ok(NormalizedEmbedding { task: emb.task.clone(), values, imputed })
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)).clamp(-1.0, 1.0))
}

/// Pairwise cosine similarity; a zero vector has similarity 0 with every
/// other task (reported in the diagnostics).
pub fn embedding_similarity(embs: &[NormalizedEmbedding]) -> (SimilarityMatrix, Vec<String>) {
    let n = embs.len();
    let mut values = vec![vec![Some(1.0); n]; n];
    let mut diagnostics = Vec::new();
    for e in embs {
        if e.values.iter().all(|&v| v == 0.0) {
            diagnostics.push(format!("{}: zero embedding", e.task));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let c = cosine(&embs[i].values, &embs[j].values).unwrap_or(0.0);
            values[i][j] = Some(c);
            values[j][i] = Some(c);
        }
    }
    let tasks = embs.iter().map(|e| e.task.clone()).collect();
    (SimilarityMatrix { tasks, values }, diagnostics)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub mean: f64,
    /// Kendall tau per task row; `None` when fewer than two comparable
    /// entries or a degenerate ranking.
    pub per_task: IndexMap<String, Option<f64>>,
}

/// Mean over task rows of Kendall tau between the embedding-similarity and
/// ground-truth rankings of the other tasks.
pub fn similarity_agreement(emb: &SimilarityMatrix, gt: &SimilarityMatrix) -> Result<AgreementReport, RouterError> {
    let mut sorted_e = emb.tasks.clone();
    let mut sorted_g = gt.tasks.clone();
    sorted_e.sort();
    sorted_g.sort();
    if sorted_e != sorted_g {
        return Err(RouterError::TaskSetMismatch);
    }
    let gidx = |t: &str| gt.tasks.iter().position(|x| x == t).unwrap();
    let mut per_task = IndexMap::new();
    for (i, ti) in emb.tasks.iter().enumerate() {
        let gi = gidx(ti);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (j, tj) in emb.tasks.iter().enumerate() {
            if i == j {
                continue;
            }
            if let (Some(a), Some(b)) = (emb.values[i][j], gt.values[gi][gidx(tj)]) {
                x.push(a);
                y.push(b);
            }
        }
        per_task.insert(ti.clone(), kendall_tau(&x, &y).ok());
    }
    let vals: Vec<f64> = per_task.values().filter_map(|v| *v).collect();
    if vals.is_empty() {
        return Err(RouterError::NoComparableRows);
    }
    Ok(AgreementReport { mean: vals.iter().sum::<f64>() / vals.len() as f64, per_task })
}
