//! Training-free affinity features from frozen random computations over the
//! typed entity graph.
//!
//! Two realizations of the same typed-path random feature map are provided:
//! a dense Rademacher code carried through a Bellman-Ford style DP, and a
//! TensorSketch that shifts a bucket offset per layer. Both satisfy
//! `E[<z(s), z(s')>] ∝ <Ψ_s, Ψ_s'>` where `Ψ_s` is the bag of token
//! sequences of walks out of `s` ([`path_bag_oracle`]).

mod affinity;
mod dp;
mod features;
mod hasher;
mod head;
mod typed;

use thiserror::Error;

pub use affinity::{affinity_scores, node_features, AffinityConfig, AffinityReport};
pub use dp::{
    dense_sign, dense_sketch, kernel_estimate, path_bag_oracle, sketch, tensor_bucket, tensor_sign,
    tensor_sketch, PathBag, PathFeatureMatrix, SketchConfig, SketchMode, DEFAULT_ORACLE_CAP,
};
pub use features::{encode_features, encode_features_with, FeatureBlock, DEFAULT_CATEGORICAL_SLOTS};
pub use hasher::{mean_aggregate, random_mp_hasher};
pub use head::{fit_head, HeadKind, LinearHead};
pub use typed::{EdgeToken, TypedGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SketchError {
    #[error("invalid sketch configuration: {0}")]
    InvalidConfig(String),
    #[error("source node {0} is out of range")]
    UnknownSource(usize),
    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),
    #[error("path enumeration exceeded the cap of {cap} walks")]
    OracleTooLarge { cap: usize },
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("linear system is singular")]
    SingularFit,
    #[error("discriminant needs both classes")]
    SingleClass,
    #[error("task needs non-empty train and val splits")]
    EmptySplit,
    #[error("{0}")]
    Metric(String),
}
