//! Task embeddings, RDL/DFS meta-classification and budgeted replay search.
//!
//! Embeddings follow a fixed [`FeatureRegistry`]; missing features are
//! imputed with bank means at normalization time and reported. Family
//! routing uses distance-weighted knn or L2 logistic regression over
//! normalized embeddings.

mod embedding;
mod hpo;
mod meta;
mod projection;
mod temporal;
mod tpe;
mod walks;

use thiserror::Error;

pub use crate::metrics::score_metric;
pub use embedding::{
    assemble_embedding, cosine, embedding_similarity, similarity_agreement, AgreementReport, EmbeddingInputs,
    FeatureRegistry, NormalizedEmbedding, Normalizer, TaskEmbedding, BASE_FEATURES, BUDGET_FEATURE,
    HEURISTIC_FEATURE, PROBE_FEATURES, REGISTRY_VERSION,
};
pub use hpo::{
    budget_samples, budget_winners, replay_hpo, BankEvaluator, BudgetWinner, Evaluator, Generator, HpoOptions,
    HpoResult, Outcome, TrialRecord, FAMILY_DIM,
};
pub use meta::{
    fit_meta, loo_eval, route, samples_from_bank, LooItem, LooReport, MetaClassifier, MetaKind, MetaModel,
    MetaSample, RouteDecision,
};
pub use projection::{apply as apply_projection, train_projection, triplets, ProjectionConfig, ProjectionResult};
pub use temporal::{entity_mean_heuristic, temporal_autocorr};
pub use tpe::{suggest_tpe, tpe_candidates, Config, Dimension, DimensionKind, SearchSpace, TpeConfig, Trial};
pub use walks::{walk_features, WalkConfig, WalkFeatures};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouterError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least 3 tasks, got {0}")]
    TooFewTasks(usize),
    #[error("all bank winners belong to one family")]
    SingleFamilyBank,
    #[error("embedding `{0}` does not match the feature registry")]
    RegistryMismatch(String),
    #[error("budget mismatch: {0}")]
    BudgetMismatch(String),
    #[error("similarity matrices cover different tasks")]
    TaskSetMismatch,
    #[error("no task row has two comparable similarities")]
    NoComparableRows,
    #[error("projection training diverged")]
    DivergedProjection,
    #[error("meta-classifier fit is singular")]
    SingularFit,
    #[error("search space: {0}")]
    EmptySpace(String),
    #[error("evaluator returned no finite outcome")]
    EvaluationFailed,
}
