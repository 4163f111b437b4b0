//! Label homophily of projected metapaths.
//!
//! Metrics are computed over the symmetric directed entries of a
//! [`ProjectedEdges`](crate::rdb::ProjectedEdges) set; entries with an
//! unlabeled endpoint are skipped and counted.

mod metrics;
mod profile;

use thiserror::Error;

pub use metrics::{
    adjusted_homophily, adjusted_homophily_of, aggregation_homophily, aggregation_homophily_of,
    class_insensitive_homophily, class_insensitive_homophily_of, class_prior, edge_homophily,
    edge_homophily_of, label_shuffle_adjusted, skipped_pairs, LabelKernel, LabeledEdges, Weighting,
};
pub use profile::{
    metapath_metrics, profile, ExcludedMetapath, HomophilyProfile, MetapathHomophily, ProfileOptions,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomophilyError {
    #[error("no edge has two labeled endpoints")]
    NoLabeledEdges,
    #[error("labels have zero variance")]
    DegenerateLabels,
    #[error("class mass is concentrated in one class")]
    DegenerateClassMass,
    #[error("metric requires a classification task")]
    NotClassification,
    #[error("no metapath produced a usable homophily value")]
    EmptyProfile,
    #[error("{0}")]
    Graph(String),
}
