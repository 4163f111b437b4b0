//! Training-free profiling of relational-database prediction tasks.
//!
//! The crate turns a relational database plus a temporal task table into a
//! task embedding (label homophily over self-looped metapaths, typed-path
//! sketch affinities, temporal and size statistics), predicts whether a
//! graph-learning (`rdl`) or feature-synthesis (`dfs`) pipeline will win
//! from a bank of past trials, and runs budgeted replay search with
//! loss-landscape post-selection. A synthetic metapath CSBM lab ships
//! alongside for checking when gated aggregation beats linear averaging.
//!
//! Module map:
//!
//! - [`rdb`]: schema/database ingestion, typed entity graph, FK-pair
//!   augmentation, metapath enumeration/projection, label aggregation.
//! - [`homophily`]: edge, adjusted, class-insensitive and aggregation
//!   homophily per metapath, and profile statistics.
//! - [`sketch`]: typed-path random features (dense sign DP and
//!   TensorSketch), path-bag oracle, random message-passing hasher,
//!   closed-form heads and affinity probes.
//! - [`landscape`]: P1/P2/Pbar indicators and checkpoint post-selection.
//! - [`bank`]: performance bank records, winners, rank similarity.
//! - [`router`]: embeddings, meta-classifiers, TPE and replay search.
//! - [`csbm`]: metapath-wise contextual SBM experiments.

pub mod bank;
pub mod csbm;
pub mod family;
pub mod hashing;
pub mod homophily;
pub mod landscape;
pub mod metrics;
pub mod rdb;
pub mod router;
pub mod sketch;
pub mod stats;

pub use family::Family;
