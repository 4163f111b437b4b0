//! Append-only performance bank of trial records, per-task winners and
//! rank-based task similarity.

mod analysis;
mod kendall;
mod record;

use std::fmt;

use thiserror::Error;

pub use analysis::{
    graphgym_similarity, signature_scores, tasks, winner, winners, SelectBy, SimilarityMatrix, SimilarityOptions,
    SimilarityReport, Winner,
};
pub use kendall::kendall_tau;
pub use record::{
    append_bank, default_exclude, load_bank, parse_bank, BankRecord, ConfigSignature, DEFAULT_SIGNATURE_EXCLUDE,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn join_lines(errs: &[LineError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BankError {
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed bank: {}", join_lines(.0))]
    Malformed(Vec<LineError>),
    #[error("task `{0}` lacks records for both families")]
    IncompleteTask(String),
    #[error("task `{0}` not in bank")]
    UnknownTask(String),
    #[error("task `{0}` mixes metric directions")]
    InconsistentDirection(String),
    #[error("rankings differ in length")]
    LengthMismatch,
    #[error("ranking is degenerate (fewer than two items or all tied)")]
    DegenerateRanking,
    #[error("non-finite {0}")]
    NonFinite(String),
}
