//! Relational data ingestion and the typed entity graph.

mod database;
mod graph;
mod metapath;
mod schema;
mod task;
#[cfg(test)]
pub(crate) mod testutil;

use std::path::PathBuf;

use thiserror::Error;

pub use database::{
    load_database, parse_timestamp, Column, ColumnData, Database, ForeignKeyLink, LoadDiagnostics,
    RawRecords, RelationDiagnostics, Table,
};
pub use graph::{augment_fk_pairs, build_graph, Csr, EdgeOrigin, EdgeTypeMeta, NodeType, RelGraph};
pub use metapath::{
    enumerate_metapaths, enumerate_metapaths_with, project_metapath, Metapath, MetapathOptions,
    ProjectedEdge, ProjectedEdges,
};
pub use schema::{load_schema, ColumnKind, ColumnSpec, ForeignKey, Schema, TableSpec, TimeFormat};
pub use task::{
    aggregate_labels, load_task, task_from_strings, EntityLabelSummary, LabelMean, MetricName,
    MetricSpec, Split, TargetKind, TaskHeader, TaskRow, TaskTable,
};

#[derive(Debug, Error)]
pub enum RdbError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Format(String),
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("duplicate table `{0}`")]
    DuplicateTable(String),
    #[error("duplicate column `{column}` in table `{table}`")]
    DuplicateColumn { table: String, column: String },
    #[error("unknown column `{column}` in table `{table}`")]
    UnknownColumn { table: String, column: String },
    #[error("unknown column kind `{kind}` for `{table}.{column}`")]
    UnknownColumnKind {
        table: String,
        column: String,
        kind: String,
    },
    #[error("foreign key `{table}.{column}` is the table's primary key")]
    ForeignKeyIsPrimaryKey { table: String, column: String },
    #[error("table `{table}` is missing declared column `{column}`")]
    MissingColumn { table: String, column: String },
    #[error("duplicate primary key `{key}` in table `{table}`")]
    DuplicatePrimaryKey { table: String, key: String },
    #[error("null primary key in table `{table}` at row {row}")]
    NullPrimaryKey { table: String, row: usize },
    #[error("task entity `{key}` not found in `{table}`")]
    UnknownEntity { table: String, key: String },
    #[error("invalid label `{label}` in task row {row}")]
    InvalidLabel { row: usize, label: String },
    #[error("task has no {0:?} rows")]
    EmptySplit(Split),
}
