use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BankError, LineError};
use crate::Family;

/// One trial: a configuration of one family evaluated on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankRecord {
    pub task: String,
    pub family: Family,
    /// Scalar (string, number or bool) architecture and hyperparameter choices.
    pub config: BTreeMap<String, Value>,
    pub val_score: f64,
    pub test_score: f64,
    pub metric: String,
    pub higher_is_better: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
}

impl BankRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.task.is_empty() {
            return Err("empty task id".into());
        }
        if !self.val_score.is_finite() || !self.test_score.is_finite() {
            return Err("scores must be finite".into());
        }
        if self.config.is_empty() {
            return Err("config map is empty".into());
        }
        if let Some((k, _)) = self.config.iter().find(|(_, v)| v.is_array() || v.is_object() || v.is_null()) {
            return Err(format!("config value `{k}` is not a scalar"));
        }
        Ok(())
    }

    /// Score oriented so that larger is better.
    pub fn oriented(&self, score: f64) -> f64 {
        if self.higher_is_better {
            score
        } else {
            -score
        }
    }
}

/// Config keys dropped from signatures by default.
pub const DEFAULT_SIGNATURE_EXCLUDE: &[&str] = &["seed"];

/// Canonical `key=value` rendering of a config map, sorted by key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigSignature(pub String);

impl ConfigSignature {
    pub fn new(config: &BTreeMap<String, Value>, exclude: &BTreeSet<String>) -> Self {
        let parts: Vec<String> = config
            .iter()
            .filter(|(k, _)| !exclude.contains(*k))
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect();
        Self(parts.join(";"))
    }

    pub fn with_default_exclude(config: &BTreeMap<String, Value>) -> Self {
        Self::new(config, &default_exclude())
    }
}

pub fn default_exclude() -> BTreeSet<String> {
    DEFAULT_SIGNATURE_EXCLUDE.iter().map(|s| s.to_string()).collect()
}

/// Parse JSONL text; blank lines are skipped. Every malformed line is
/// reported with its 1-based number.
pub fn parse_bank(text: &str) -> Result<Vec<BankRecord>, BankError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<BankRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(r) => records.push(r),
            Err(message) => errors.push(LineError { line: k + 1, message }),
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(BankError::Malformed(errors))
    }
}

pub fn load_bank(path: &Path) -> Result<Vec<BankRecord>, BankError> {
    let text = std::fs::read_to_string(path).map_err(|e| BankError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_bank(&text)
}

/// Append validated records, one JSON object per line.
pub fn append_bank(path: &Path, records: &[BankRecord]) -> Result<(), BankError> {
    let mut out = String::new();
    for (k, r) in records.iter().enumerate() {
        r.validate()
            .map_err(|message| BankError::Malformed(vec![LineError { line: k + 1, message }]))?;
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    let io = |e: std::io::Error| BankError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let needs_newline = std::fs::read(path)
        .map(|b| b.last().is_some_and(|&c| c != b'\n'))
        .unwrap_or(false);
    if needs_newline {
        out.insert(0, '\n');
    }
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    f.write_all(out.as_bytes()).map_err(io)?;
    f.sync_data().map_err(io)
}
