//! Metapath-wise contextual SBM laboratory.
//!
//! Labels are ±1 with prior π, node scores are ψ | Y ~ N(Y·Δ/2, 1) and each
//! metapath draws edges independently with probability p (same labels) or q
//! (different labels). Scores are compared under clip-gated MAP aggregation
//! and fixed linear aggregation.

mod experiments;
mod model;
mod scores;

use thiserror::Error;

pub use experiments::{
    compare, crossover_experiment, crossover_spec, gating_experiment, Comparison, CrossoverOptions,
    CrossoverReport, GatingReport, GatingSetup, SeedCurve, MIN_SEEDS, STRONG_DELTA, STRONG_GAMMA,
};
pub use model::{sample, CsbmInstance, CsbmSpec, MetapathSpec};
pub use scores::{
    estimate_gamma, gamma_alpha, linear_scores, map_scores, misclass_on, misclass_rate, phi_max, predict, rho_lin,
    snr, GammaAlpha, MetapathSnr, SnrReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsbmError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need at least 10 seeds, got {0}")]
    TooFewSeeds(usize),
    #[error("need at least 1000 Monte Carlo samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}
