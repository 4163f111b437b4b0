use serde::Serialize;

use crate::hashing::fnv1a;
use crate::rdb::{ColumnData, Database};

pub const DEFAULT_CATEGORICAL_SLOTS: usize = 32;

/// Row-major numeric features for one table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureBlock {
    pub table: String,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl FeatureBlock {
    pub fn width(&self) -> usize {
        self.names.len()
    }
}

/// Numeric columns are z-scored (population std, zero variance and nulls
/// map to 0); categorical columns are feature-hashed into `slots` one-hot
/// slots; key and text columns are skipped.
pub fn encode_features_with(db: &Database, table: &str, slots: usize) -> Option<FeatureBlock> {
    let t = db.table(table)?;
    let spec = db.schema.table(table)?;
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut warnings = Vec::new();
    for col in &t.columns {
        if col.name == spec.primary_key || spec.is_foreign_key(&col.name) {
            continue;
        }
        match &col.data {
            ColumnData::Numeric(vals) => {
                let present: Vec<f64> = vals.iter().flatten().copied().collect();
                let n = present.len().max(1) as f64;
                let mu = present.iter().sum::<f64>() / n;
                let sd = (present.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt();
                names.push(col.name.clone());
                cols.push(
                    vals.iter()
                        .map(|v| match v {
                            Some(x) if sd > 0.0 => (x - mu) / sd,
                            _ => 0.0,
                        })
                        .collect(),
                );
            }
            ColumnData::Categorical(vals) => {
                let mut block = vec![vec![0.0; t.n_rows]; slots];
                for (r, v) in vals.iter().enumerate() {
                    if let Some(v) = v {
                        block[(fnv1a(v.as_bytes()) % slots as u64) as usize][r] = 1.0;
                    }
                }
                names.extend((0..slots).map(|i| format!("{}#{i}", col.name)));
                cols.extend(block);
            }
            ColumnData::Text(_) => {}
        }
    }
    if names.is_empty() {
        warnings.push(format!("table `{table}` has no numeric or categorical feature columns"));
    }
    let rows = (0..t.n_rows).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    Some(FeatureBlock {
        table: table.to_string(),
        names,
        rows,
        warnings,
    })
}

pub fn encode_features(db: &Database, table: &str) -> Option<FeatureBlock> {
    encode_features_with(db, table, DEFAULT_CATEGORICAL_SLOTS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdb::{RawRecords, Schema};

    fn db(rows: &[[&str; 4]]) -> Database {
        let schema = Schema::from_json(
            r#"{"tables": [{"name": "t", "file": "t.csv", "primary_key": "id",
            "columns": [{"name": "id", "kind": "categorical"}, {"name": "x", "kind": "numeric"},
                        {"name": "c", "kind": "categorical"}, {"name": "note", "kind": "text"}]}]}"#,
        )
        .unwrap();
        let recs = RawRecords {
            headers: ["id", "x", "c", "note"].iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        };
        Database::from_records(schema, vec![recs]).unwrap()
    }

    #[test]
    fn constant_numeric_is_zero_and_categories_hash_apart() {
        let d = db(&[["a", "5", "red", "hi"], ["b", "5", "blue", "yo"], ["c", "5", "red", ""]]);
        let f = encode_features(&d, "t").unwrap();
        assert_eq!(f.width(), 1 + 32);
        assert!(f.rows.iter().all(|r| r[0] == 0.0));
        let slot = |r: &Vec<f64>| r[1..].iter().position(|&x| x == 1.0).unwrap();
        assert_ne!(slot(&f.rows[0]), slot(&f.rows[1]));
        assert_eq!(slot(&f.rows[0]), slot(&f.rows[2]));
    }

    #[test]
    fn numeric_is_z_scored_with_nulls_at_zero() {
        let d = db(&[["a", "1", "", ""], ["b", "3", "", ""], ["c", "", "", ""]]);
        let f = encode_features(&d, "t").unwrap();
        assert_eq!(f.rows[0][0], -1.0);
        assert_eq!(f.rows[1][0], 1.0);
        assert_eq!(f.rows[2][0], 0.0);
    }

    #[test]
    fn text_only_table_warns() {
        let schema = Schema::from_json(
            r#"{"tables": [{"name": "t", "file": "t.csv", "primary_key": "id",
            "columns": [{"name": "id", "kind": "categorical"}, {"name": "note", "kind": "text"}]}]}"#,
        )
        .unwrap();
        let recs = RawRecords {
            headers: vec!["id".into(), "note".into()],
            rows: vec![vec!["a".into(), "x".into()]],
        };
        let d = Database::from_records(schema, vec![recs]).unwrap();
        let f = encode_features(&d, "t").unwrap();
        assert_eq!(f.width(), 0);
        assert_eq!(f.warnings.len(), 1);
    }
}
