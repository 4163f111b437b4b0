use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use super::schema::{ColumnKind, Schema, TableSpec, TimeFormat};
use super::RdbError;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
    Text(Vec<Option<String>>),
}

impl ColumnData {
    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
            ColumnData::Text(_) => ColumnKind::Text,
        }
    }

    pub fn null_count(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
            ColumnData::Categorical(v) | ColumnData::Text(v) => {
                v.iter().filter(|x| x.is_none()).count()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Resolved foreign-key column: for every row, the referenced row index in
/// the target table (`None` for null or dangling values).
#[derive(Debug, Clone, PartialEq)]
pub struct ForeignKeyLink {
    pub column: String,
    pub target_table: usize,
    pub targets: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub n_rows: usize,
    pub columns: Vec<Column>,
    /// Primary-key value per row.
    pub keys: Vec<String>,
    pub pk_index: HashMap<String, usize>,
    /// Parsed timestamps (epoch seconds) when the table declares a time column.
    pub times: Option<Vec<Option<i64>>>,
    pub foreign_keys: Vec<ForeignKeyLink>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn row_of(&self, key: &str) -> Option<usize> {
        self.pk_index.get(key).copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RelationDiagnostics {
    pub table: String,
    pub column: String,
    pub references_table: String,
    pub null_count: usize,
    pub dangling_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadDiagnostics {
    pub relations: Vec<RelationDiagnostics>,
    /// Numeric or time cells that failed to parse and were stored as null.
    pub parse_warnings: usize,
}

/// Raw string records for one table (header + rows), as read from a file.
#[derive(Debug, Clone, Default)]
pub struct RawRecords {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Database {
    pub schema: Schema,
    pub tables: Vec<Table>,
    pub diagnostics: LoadDiagnostics,
}

impl Database {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t.name == name)
    }

    /// Build a database from in-memory records, one entry per schema table
    /// in schema order.
    pub fn from_records(schema: Schema, records: Vec<RawRecords>) -> Result<Self, RdbError> {
        schema.validate()?;
        if records.len() != schema.tables.len() {
            return Err(RdbError::Format(format!(
                "expected records for {} tables, got {}",
                schema.tables.len(),
                records.len()
            )));
        }
        let mut warnings = 0usize;
        let mut tables = Vec::with_capacity(records.len());
        for (spec, raw) in schema.tables.iter().zip(&records) {
            tables.push(build_table(spec, raw, &mut warnings)?);
        }

        let mut relations = Vec::new();
        for (ti, spec) in schema.tables.iter().enumerate() {
            let mut links = Vec::with_capacity(spec.foreign_keys.len());
            for fk in &spec.foreign_keys {
                let target = schema
                    .table_index(&fk.references_table)
                    .ok_or_else(|| RdbError::UnknownTable(fk.references_table.clone()))?;
                let values = key_strings(&tables[ti], &fk.column);
                let mut diag = RelationDiagnostics {
                    table: spec.name.clone(),
                    column: fk.column.clone(),
                    references_table: fk.references_table.clone(),
                    ..Default::default()
                };
                let targets = values
                    .iter()
                    .map(|v| match v {
                        None => {
                            diag.null_count += 1;
                            None
                        }
                        Some(key) => {
                            let hit = tables[target].row_of(key);
                            if hit.is_none() {
                                diag.dangling_count += 1;
                            }
                            hit
                        }
                    })
                    .collect();
                relations.push(diag);
                links.push(ForeignKeyLink {
                    column: fk.column.clone(),
                    target_table: target,
                    targets,
                });
            }
            tables[ti].foreign_keys = links;
        }

        Ok(Database {
            schema,
            tables,
            diagnostics: LoadDiagnostics {
                relations,
                parse_warnings: warnings,
            },
        })
    }
}

/// Load every table file of `schema` relative to `dir`.
pub fn load_database(schema: &Schema, dir: impl AsRef<Path>) -> Result<Database, RdbError> {
    let dir = dir.as_ref();
    let mut records = Vec::with_capacity(schema.tables.len());
    for spec in &schema.tables {
        let path = dir.join(&spec.file);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&path)
            .map_err(|e| csv_error(&path, e))?;
        let headers = reader
            .headers()
            .map_err(|e| csv_error(&path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_error(&path, e))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        records.push(RawRecords { headers, rows });
    }
    Database::from_records(schema.clone(), records)
}

fn csv_error(path: &Path, e: csv::Error) -> RdbError {
    match e.kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => RdbError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        },
        _ => RdbError::Format(format!("{}: {e}", path.display())),
    }
}

fn is_null(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("null") || c.eq_ignore_ascii_case("nan")
}

fn build_table(spec: &TableSpec, raw: &RawRecords, warnings: &mut usize) -> Result<Table, RdbError> {
    let mut positions = Vec::with_capacity(spec.columns.len());
    for c in &spec.columns {
        let pos = raw.headers.iter().position(|h| h == &c.name).ok_or_else(|| {
            RdbError::MissingColumn {
                table: spec.name.clone(),
                column: c.name.clone(),
            }
        })?;
        positions.push(pos);
    }
    let n_rows = raw.rows.len();
    let cell = |row: &Vec<String>, pos: usize| -> Option<String> {
        row.get(pos)
            .filter(|c| !is_null(c))
            .map(|c| c.trim().to_string())
    };

    let mut columns = Vec::with_capacity(spec.columns.len());
    for (c, &pos) in spec.columns.iter().zip(&positions) {
        let data = match c.kind {
            ColumnKind::Numeric => ColumnData::Numeric(
                raw.rows
                    .iter()
                    .map(|r| {
                        cell(r, pos).and_then(|s| match s.parse::<f64>() {
                            Ok(v) if v.is_finite() => Some(v),
                            _ => {
                                *warnings += 1;
                                None
                            }
                        })
                    })
                    .collect(),
            ),
            ColumnKind::Categorical => {
                ColumnData::Categorical(raw.rows.iter().map(|r| cell(r, pos)).collect())
            }
            ColumnKind::Text => ColumnData::Text(raw.rows.iter().map(|r| cell(r, pos)).collect()),
        };
        columns.push(Column {
            name: c.name.clone(),
            data,
        });
    }

    let pk_pos = positions[spec.columns.iter().position(|c| c.name == spec.primary_key).unwrap()];
    let mut keys = Vec::with_capacity(n_rows);
    let mut pk_index = HashMap::with_capacity(n_rows);
    for (i, r) in raw.rows.iter().enumerate() {
        let key = cell(r, pk_pos).ok_or_else(|| RdbError::NullPrimaryKey {
            table: spec.name.clone(),
            row: i,
        })?;
        if pk_index.insert(key.clone(), i).is_some() {
            return Err(RdbError::DuplicatePrimaryKey {
                table: spec.name.clone(),
                key,
            });
        }
        keys.push(key);
    }

    let times = spec.time_column.as_ref().map(|tc| {
        let pos = positions[spec.columns.iter().position(|c| &c.name == tc).unwrap()];
        raw.rows
            .iter()
            .map(|r| {
                cell(r, pos).and_then(|s| {
                    let t = parse_timestamp(&s, spec.time_format);
                    if t.is_none() {
                        *warnings += 1;
                    }
                    t
                })
            })
            .collect()
    });

    Ok(Table {
        name: spec.name.clone(),
        n_rows,
        columns,
        keys,
        pk_index,
        times,
        foreign_keys: Vec::new(),
    })
}

/// Column values rendered as key strings (for FK resolution).
fn key_strings(table: &Table, column: &str) -> Vec<Option<String>> {
    match table.column(column).map(|c| &c.data) {
        Some(ColumnData::Categorical(v)) | Some(ColumnData::Text(v)) => v.clone(),
        Some(ColumnData::Numeric(v)) => v
            .iter()
            .map(|x| {
                x.map(|x| {
                    if x.fract() == 0.0 && x.abs() < 1e15 {
                        format!("{}", x as i64)
                    } else {
                        x.to_string()
                    }
                })
            })
            .collect(),
        None => vec![None; table.n_rows],
    }
}

/// Parse a timestamp cell into epoch seconds.
pub fn parse_timestamp(s: &str, format: TimeFormat) -> Option<i64> {
    let s = s.trim();
    let epoch = || s.parse::<i64>().ok();
    let iso = || {
        use chrono::{DateTime, NaiveDate, NaiveDateTime};
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Some(dt.timestamp());
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
                return Some(dt.and_utc().timestamp());
            }
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .ok()
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(|dt| dt.and_utc().timestamp())
    };
    match format {
        TimeFormat::Epoch => epoch(),
        TimeFormat::Iso8601 => iso(),
        TimeFormat::Auto => epoch().or_else(iso),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::from_json(
            r#"{"tables": [
            {"name": "drivers", "file": "drivers.csv", "primary_key": "id",
             "columns": [{"name": "id", "kind": "categorical"}, {"name": "age", "kind": "numeric"}]},
            {"name": "results", "file": "results.csv", "primary_key": "id",
             "foreign_keys": [{"column": "driver", "references_table": "drivers"}],
             "columns": [{"name": "id", "kind": "categorical"}, {"name": "driver", "kind": "categorical"}]}
        ]}"#,
        )
        .unwrap()
    }

    fn recs(headers: &[&str], rows: &[&[&str]]) -> RawRecords {
        RawRecords {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: rows
                .iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        }
    }

    #[test]
    fn empty_table_loads() {
        let db = Database::from_records(
            schema(),
            vec![recs(&["id", "age"], &[]), recs(&["id", "driver"], &[])],
        )
        .unwrap();
        assert_eq!(db.tables[0].n_rows, 0);
        assert_eq!(db.tables[1].n_rows, 0);
    }

    #[test]
    fn null_fk_counted_not_dangling() {
        let db = Database::from_records(
            schema(),
            vec![
                recs(&["id", "age"], &[&["d1", "30"]]),
                recs(&["id", "driver"], &[&["r1", "d1"], &["r2", ""], &["r3", "d1"]]),
            ],
        )
        .unwrap();
        let rel = &db.diagnostics.relations[0];
        assert_eq!(rel.null_count, 1);
        assert_eq!(rel.dangling_count, 0);
        assert_eq!(db.tables[1].foreign_keys[0].targets, vec![Some(0), None, Some(0)]);
    }

    #[test]
    fn dangling_fk_recorded() {
        let db = Database::from_records(
            schema(),
            vec![
                recs(&["id", "age"], &[&["d1", "30"]]),
                recs(&["id", "driver"], &[&["r1", "d9"]]),
            ],
        )
        .unwrap();
        assert_eq!(db.diagnostics.relations[0].dangling_count, 1);
    }

    #[test]
    fn duplicate_pk() {
        let err = Database::from_records(
            schema(),
            vec![
                recs(&["id", "age"], &[&["d1", "30"], &["d1", "31"]]),
                recs(&["id", "driver"], &[]),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, RdbError::DuplicatePrimaryKey { .. }));
    }

    #[test]
    fn unparseable_numeric_becomes_null() {
        let db = Database::from_records(
            schema(),
            vec![
                recs(&["id", "age"], &[&["d1", "thirty"], &["d2", "41"]]),
                recs(&["id", "driver"], &[]),
            ],
        )
        .unwrap();
        assert_eq!(db.diagnostics.parse_warnings, 1);
        assert_eq!(
            db.tables[0].column("age").unwrap().data,
            ColumnData::Numeric(vec![None, Some(41.0)])
        );
    }

    #[test]
    fn missing_column() {
        let err = Database::from_records(
            schema(),
            vec![recs(&["id"], &[]), recs(&["id", "driver"], &[])],
        )
        .unwrap_err();
        assert!(matches!(err, RdbError::MissingColumn { .. }));
    }

    #[test]
    fn timestamps() {
        assert_eq!(parse_timestamp("86400", TimeFormat::Auto), Some(86400));
        assert_eq!(parse_timestamp("1970-01-02", TimeFormat::Auto), Some(86400));
        assert_eq!(parse_timestamp("1970-01-02T00:00:10Z", TimeFormat::Iso8601), Some(86410));
        assert_eq!(parse_timestamp("1970-01-02", TimeFormat::Epoch), None);
    }
}
