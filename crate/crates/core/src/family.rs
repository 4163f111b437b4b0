use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Model family of a pipeline: end-to-end relational deep learning or deep
/// feature synthesis followed by a tabular learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rdl,
    Dfs,
}

impl Family {
    pub const ALL: [Family; 2] = [Family::Rdl, Family::Dfs];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Rdl => "rdl",
            Family::Dfs => "dfs",
        }
    }

    pub fn other(self) -> Family {
        match self {
            Family::Rdl => Family::Dfs,
            Family::Dfs => Family::Rdl,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rdl" => Ok(Family::Rdl),
            "dfs" => Ok(Family::Dfs),
            other => Err(format!("unknown family `{other}` (expected rdl|dfs)")),
        }
    }
}
