use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RdbError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Text,
}

impl ColumnKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "numeric" => Some(ColumnKind::Numeric),
            "categorical" => Some(ColumnKind::Categorical),
            "text" => Some(ColumnKind::Text),
            _ => None,
        }
    }
}

/// How a time column is encoded in the table file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeFormat {
    /// ISO-8601 date or date-time.
    Iso8601,
    /// Integer seconds since the Unix epoch.
    Epoch,
    /// Integer epoch seconds if the cell parses as an integer, ISO-8601 otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub column: String,
    pub references_table: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub file: PathBuf,
    pub primary_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_column: Option<String>,
    #[serde(default)]
    pub time_format: TimeFormat,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKey>,
    pub columns: Vec<ColumnSpec>,
}

impl TableSpec {
    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn is_foreign_key(&self, column: &str) -> bool {
        self.foreign_keys.iter().any(|fk| fk.column == column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub tables: Vec<TableSpec>,
}

// Raw mirror of the on-disk descriptor so column kinds can be reported as
// `UnknownColumnKind` instead of a generic parse failure.
#[derive(Deserialize)]
struct RawSchema {
    tables: Vec<RawTable>,
}

#[derive(Deserialize)]
struct RawTable {
    name: String,
    file: PathBuf,
    primary_key: String,
    #[serde(default)]
    time_column: Option<String>,
    #[serde(default)]
    time_format: TimeFormat,
    #[serde(default)]
    foreign_keys: Vec<ForeignKey>,
    columns: Vec<RawColumn>,
}

#[derive(Deserialize)]
struct RawColumn {
    name: String,
    kind: String,
}

impl Schema {
    pub fn table(&self, name: &str) -> Option<&TableSpec> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    /// Parse a schema descriptor from JSON text and validate it.
    pub fn from_json(text: &str) -> Result<Self, RdbError> {
        let raw: RawSchema =
            serde_json::from_str(text).map_err(|e| RdbError::Format(e.to_string()))?;
        let mut tables = Vec::with_capacity(raw.tables.len());
        for t in raw.tables {
            let mut columns = Vec::with_capacity(t.columns.len());
            for c in t.columns {
                let kind = ColumnKind::parse(&c.kind).ok_or_else(|| RdbError::UnknownColumnKind {
                    table: t.name.clone(),
                    column: c.name.clone(),
                    kind: c.kind.clone(),
                })?;
                columns.push(ColumnSpec { name: c.name, kind });
            }
            tables.push(TableSpec {
                name: t.name,
                file: t.file,
                primary_key: t.primary_key,
                time_column: t.time_column,
                time_format: t.time_format,
                foreign_keys: t.foreign_keys,
                columns,
            });
        }
        let schema = Schema { tables };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), RdbError> {
        let mut seen = HashSet::new();
        for t in &self.tables {
            if !seen.insert(t.name.as_str()) {
                return Err(RdbError::DuplicateTable(t.name.clone()));
            }
        }
        for t in &self.tables {
            let mut cols = HashSet::new();
            for c in &t.columns {
                if !cols.insert(c.name.as_str()) {
                    return Err(RdbError::DuplicateColumn {
                        table: t.name.clone(),
                        column: c.name.clone(),
                    });
                }
            }
            if t.column(&t.primary_key).is_none() {
                return Err(RdbError::UnknownColumn {
                    table: t.name.clone(),
                    column: t.primary_key.clone(),
                });
            }
            if let Some(tc) = &t.time_column {
                if t.column(tc).is_none() {
                    return Err(RdbError::UnknownColumn {
                        table: t.name.clone(),
                        column: tc.clone(),
                    });
                }
            }
            for fk in &t.foreign_keys {
                if !seen.contains(fk.references_table.as_str()) {
                    return Err(RdbError::UnknownTable(fk.references_table.clone()));
                }
                if t.column(&fk.column).is_none() {
                    return Err(RdbError::UnknownColumn {
                        table: t.name.clone(),
                        column: fk.column.clone(),
                    });
                }
                if fk.column == t.primary_key {
                    return Err(RdbError::ForeignKeyIsPrimaryKey {
                        table: t.name.clone(),
                        column: fk.column.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Read and validate a `schema.json` descriptor.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema, RdbError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| RdbError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Schema::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const F1: &str = r#"{"tables": [
        {"name": "drivers", "file": "drivers.csv", "primary_key": "driver_id",
         "columns": [{"name": "driver_id", "kind": "categorical"}]},
        {"name": "races", "file": "races.csv", "primary_key": "race_id", "time_column": "date",
         "columns": [{"name": "race_id", "kind": "categorical"}, {"name": "date", "kind": "numeric"}]},
        {"name": "results", "file": "results.csv", "primary_key": "result_id",
         "foreign_keys": [{"column": "driver_id", "references_table": "drivers"},
                          {"column": "race_id", "references_table": "races"}],
         "columns": [{"name": "result_id", "kind": "categorical"},
                     {"name": "driver_id", "kind": "categorical"},
                     {"name": "race_id", "kind": "categorical"},
                     {"name": "points", "kind": "numeric"}]}
    ]}"#;

    #[test]
    fn minimal_schema() {
        let s = Schema::from_json(
            r#"{"tables":[{"name":"a","file":"a.csv","primary_key":"id","columns":[{"name":"id","kind":"numeric"}]}]}"#,
        )
        .unwrap();
        assert_eq!(s.tables.len(), 1);
        assert!(s.tables[0].foreign_keys.is_empty());
    }

    #[test]
    fn f1_like_schema_has_two_relations() {
        let s = Schema::from_json(F1).unwrap();
        let n: usize = s.tables.iter().map(|t| t.foreign_keys.len()).sum();
        assert_eq!(n, 2);
    }

    #[test]
    fn unknown_table() {
        let text = F1.replace("\"references_table\": \"races\"", "\"references_table\": \"circuits\"");
        assert!(matches!(Schema::from_json(&text), Err(RdbError::UnknownTable(t)) if t == "circuits"));
    }

    #[test]
    fn duplicate_table() {
        let text = F1.replace("\"name\": \"races\"", "\"name\": \"drivers\"");
        assert!(matches!(Schema::from_json(&text), Err(RdbError::DuplicateTable(_))));
    }

    #[test]
    fn unknown_column_kind() {
        let text = F1.replace("{\"name\": \"points\", \"kind\": \"numeric\"}", "{\"name\": \"points\", \"kind\": \"blob\"}");
        assert!(matches!(Schema::from_json(&text), Err(RdbError::UnknownColumnKind { .. })));
    }

    #[test]
    fn fk_cannot_be_pk() {
        let text = r#"{"tables":[{"name":"a","file":"a.csv","primary_key":"id",
            "foreign_keys":[{"column":"id","references_table":"a"}],
            "columns":[{"name":"id","kind":"numeric"}]}]}"#;
        assert!(matches!(Schema::from_json(text), Err(RdbError::ForeignKeyIsPrimaryKey { .. })));
    }

    #[test]
    fn missing_file() {
        let err = load_schema("/nonexistent/schema.json").unwrap_err();
        assert!(matches!(err, RdbError::Io { .. }));
    }
}
