use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::database::{parse_timestamp, Database};
use super::schema::TimeFormat;
use super::RdbError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TargetKind {
    Classification { num_classes: usize },
    Regression,
}

impl TargetKind {
    /// Width of the per-entity mean label vector.
    pub fn label_dim(self) -> usize {
        match self {
            TargetKind::Classification { num_classes } => num_classes,
            TargetKind::Regression => 1,
        }
    }

    pub fn is_classification(self) -> bool {
        matches!(self, TargetKind::Classification { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    RocAuc,
    Mae,
    Accuracy,
}

impl MetricName {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::RocAuc => "roc_auc",
            MetricName::Mae => "mae",
            MetricName::Accuracy => "accuracy",
        }
    }

    pub fn default_higher_is_better(self) -> bool {
        !matches!(self, MetricName::Mae)
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "roc_auc" | "auroc" => Ok(MetricName::RocAuc),
            "mae" => Ok(MetricName::Mae),
            "accuracy" => Ok(MetricName::Accuracy),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: MetricName,
    pub higher_is_better: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskRow {
    /// Row index of the entity in the entity table.
    pub entity: usize,
    pub timestamp: i64,
    /// Class index (classification) or target value (regression).
    pub label: f64,
    pub split: Split,
}

/// Header of `task.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskHeader {
    pub name: String,
    pub entity_table: String,
    pub entity_column: String,
    pub time_column: String,
    pub target: TargetKind,
    pub metric: MetricSpec,
    pub rows_file: PathBuf,
    #[serde(default)]
    pub time_format: TimeFormat,
}

#[derive(Debug, Clone)]
pub struct TaskTable {
    pub name: String,
    pub entity_table: String,
    pub entity_column: String,
    pub time_column: String,
    pub target: TargetKind,
    pub metric: MetricSpec,
    pub rows: Vec<TaskRow>,
}

impl TaskTable {
    /// Validate rows against the task invariants.
    pub fn new(header: &TaskHeader, rows: Vec<TaskRow>, num_entities: usize) -> Result<Self, RdbError> {
        for (i, r) in rows.iter().enumerate() {
            if r.entity >= num_entities {
                return Err(RdbError::Format(format!("task row {i}: entity index out of range")));
            }
            if let TargetKind::Classification { num_classes } = header.target {
                if r.label < 0.0 || r.label.fract() != 0.0 || r.label as usize >= num_classes {
                    return Err(RdbError::InvalidLabel {
                        row: i,
                        label: r.label.to_string(),
                    });
                }
            } else if !r.label.is_finite() {
                return Err(RdbError::InvalidLabel {
                    row: i,
                    label: r.label.to_string(),
                });
            }
        }
        for split in [Split::Train, Split::Val] {
            if !rows.iter().any(|r| r.split == split) {
                return Err(RdbError::EmptySplit(split));
            }
        }
        Ok(Self {
            name: header.name.clone(),
            entity_table: header.entity_table.clone(),
            entity_column: header.entity_column.clone(),
            time_column: header.time_column.clone(),
            target: header.target,
            metric: header.metric,
            rows,
        })
    }

    pub fn rows_in(&self, split: Split) -> impl Iterator<Item = &TaskRow> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.rows_in(split).count()
    }

    pub fn max_train_timestamp(&self) -> Option<i64> {
        self.rows_in(Split::Train).map(|r| r.timestamp).max()
    }
}

/// Read `task.json` and its rows file, resolving entity ids against `db`.
pub fn load_task(path: impl AsRef<Path>, db: &Database) -> Result<TaskTable, RdbError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RdbError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let header: TaskHeader =
        serde_json::from_str(&text).map_err(|e| RdbError::Format(format!("{}: {e}", path.display())))?;
    let rows_path = path.parent().unwrap_or(Path::new(".")).join(&header.rows_file);
    let mut reader = csv::Reader::from_path(&rows_path).map_err(|e| {
        RdbError::Format(format!("{}: {e}", rows_path.display()))
    })?;
    let headers = reader
        .headers()
        .map_err(|e| RdbError::Format(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| RdbError::MissingColumn {
                table: header.rows_file.display().to_string(),
                column: name.to_string(),
            })
    };
    let (ci, ct, cl, cs) = (col("entity_id")?, col("timestamp")?, col("label")?, col("split")?);
    let mut raw = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| RdbError::Format(e.to_string()))?;
        raw.push([
            rec.get(ci).unwrap_or("").to_string(),
            rec.get(ct).unwrap_or("").to_string(),
            rec.get(cl).unwrap_or("").to_string(),
            rec.get(cs).unwrap_or("").to_string(),
        ]);
    }
    task_from_strings(&header, &raw, db)
}

/// Build a task from string rows `[entity_id, timestamp, label, split]`.
pub fn task_from_strings(
    header: &TaskHeader,
    raw: &[[String; 4]],
    db: &Database,
) -> Result<TaskTable, RdbError> {
    let table = db
        .table(&header.entity_table)
        .ok_or_else(|| RdbError::UnknownTable(header.entity_table.clone()))?;
    let mut rows = Vec::with_capacity(raw.len());
    for (i, [id, ts, label, split]) in raw.iter().enumerate() {
        let entity = table.row_of(id.trim()).ok_or_else(|| RdbError::UnknownEntity {
            table: table.name.clone(),
            key: id.clone(),
        })?;
        let timestamp = parse_timestamp(ts, header.time_format)
            .ok_or_else(|| RdbError::Format(format!("task row {i}: bad timestamp `{ts}`")))?;
        let label: f64 = label.trim().parse().map_err(|_| RdbError::InvalidLabel {
            row: i,
            label: label.clone(),
        })?;
        let split = split.parse().map_err(RdbError::Format)?;
        rows.push(TaskRow {
            entity,
            timestamp,
            label,
            split,
        });
    }
    TaskTable::new(header, rows, table.n_rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelMean {
    pub mean: Vec<f64>,
    pub count: usize,
}

/// Temporally aggregated per-entity mean labels (train rows up to a cutoff).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityLabelSummary {
    pub target: TargetKind,
    pub cutoff: Option<i64>,
    pub entries: BTreeMap<u32, LabelMean>,
}

impl EntityLabelSummary {
    pub fn dim(&self) -> usize {
        self.target.label_dim()
    }

    pub fn get(&self, entity: u32) -> Option<&[f64]> {
        self.entries.get(&entity).map(|e| e.mean.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Build directly from per-entity mean vectors (tests, synthetic data).
    pub fn from_means(target: TargetKind, means: impl IntoIterator<Item = (u32, Vec<f64>)>) -> Self {
        Self {
            target,
            cutoff: None,
            entries: means
                .into_iter()
                .map(|(k, mean)| (k, LabelMean { mean, count: 1 }))
                .collect(),
        }
    }
}

/// Mean one-hot (classification) or scalar (regression) label per entity
/// over train rows with `timestamp <= cutoff`. The cutoff defaults to the
/// latest train timestamp.
pub fn aggregate_labels(task: &TaskTable, cutoff: Option<i64>) -> EntityLabelSummary {
    let cutoff = cutoff.or_else(|| task.max_train_timestamp());
    let dim = task.target.label_dim();
    let mut sums: BTreeMap<u32, (Vec<f64>, usize)> = BTreeMap::new();
    for r in task.rows_in(Split::Train) {
        if cutoff.is_some_and(|c| r.timestamp > c) {
            continue;
        }
        let slot = sums.entry(r.entity as u32).or_insert_with(|| (vec![0.0; dim], 0));
        match task.target {
            TargetKind::Classification { .. } => slot.0[r.label as usize] += 1.0,
            TargetKind::Regression => slot.0[0] += r.label,
        }
        slot.1 += 1;
    }
    let entries = sums
        .into_iter()
        .map(|(k, (s, n))| {
            (
                k,
                LabelMean {
                    mean: s.into_iter().map(|x| x / n as f64).collect(),
                    count: n,
                },
            )
        })
        .collect();
    EntityLabelSummary {
        target: task.target,
        cutoff,
        entries,
    }
}
