//! Loss-landscape indicators on a 2D slice around a checkpoint and hard-vote
//! post-selection among top validation candidates.
//!
//! Grids come from an external producer; [`demo_surface`] generates analytic
//! ones with exact rays.

mod indicators;
mod surface;

use thiserror::Error;

pub use indicators::{
    landscape_metrics, p1, p2, pbar, post_select, BarrierResult, Candidate, LandscapeMetrics, PostSelection,
    MAX_CANDIDATES,
};
pub use surface::{
    demo_surface, surface_from_fn, DemoKind, LossSurfaceGrid, Ray, CONSISTENCY_TOL, DEMO_RAY_SAMPLES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LandscapeError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed surface file: {0}")]
    Parse(String),
    #[error("grid must be at least 3x3")]
    TooSmall,
    #[error("{0} coordinates must be strictly increasing")]
    NonMonotone(&'static str),
    #[error("{0} coordinates must be symmetric about 0")]
    NotSymmetric(&'static str),
    #[error("grid has no (0, 0) coordinate")]
    MissingCenter,
    #[error("loss matrix shape does not match the coordinates")]
    Shape,
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("loss at (0, 0) differs from base_loss")]
    CenterMismatch,
    #[error("ray ({i}, {j}): {reason}")]
    InvalidRay { i: usize, j: usize, reason: String },
    #[error("ray ({i}, {j}) endpoints disagree with the grid")]
    InconsistentRay { i: usize, j: usize },
    #[error("spacing around the center is not uniform")]
    IrregularGrid,
    #[error("no ray for boundary point ({i}, {j}) and interpolation is disabled")]
    MissingRays { i: usize, j: usize },
    #[error("{0}")]
    InvalidDemo(String),
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("at most 3 candidates, got {0}")]
    TooManyCandidates(usize),
    #[error("candidates come from different model families")]
    CrossFamilyComparison,
    #[error("candidates disagree on metric direction")]
    MixedDirection,
}
