use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rdbprofile::homophily::{self, HomophilyProfile, ProfileOptions, Weighting};
use rdbprofile::rdb::{
    aggregate_labels, augment_fk_pairs, build_graph, load_database, load_schema, load_task, Database, EdgeOrigin,
    MetapathOptions, RelGraph, RelationDiagnostics, Split, TaskTable,
};
use rdbprofile::router::{
    assemble_embedding, entity_mean_heuristic, temporal_autocorr, walk_features, EmbeddingInputs, TaskEmbedding,
    WalkConfig, REGISTRY_VERSION,
};
use rdbprofile::sketch::{self, AffinityConfig, AffinityReport, SketchConfig, SketchMode, TypedGraph};
use serde::{Deserialize, Serialize};

use crate::output::{envelope, to_json, Run};
use crate::{DbArgs, HomophilyArgs, IngestArgs, ModeArg, ProfileArgs, SketchArgs, WeightingArg};

fn load_db(args: &DbArgs, run: &mut Run) -> Result<Database> {
    let schema = load_schema(&args.schema).with_context(|| format!("loading schema {}", args.schema.display()))?;
    run.input(&args.schema)?;
    let dir = match &args.data_dir {
        Some(d) => d.clone(),
        None => args.schema.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    for t in &schema.tables {
        run.input(&dir.join(&t.file))?;
    }
    Ok(load_database(&schema, &dir)?)
}

fn load_task_file(path: &Path, db: &Database, run: &mut Run) -> Result<TaskTable> {
    let task = load_task(path, db).with_context(|| format!("loading task {}", path.display()))?;
    run.input(path)?;
    let header: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if let Some(rows) = header.get("rows_file").and_then(|v| v.as_str()) {
        run.input(&path.parent().unwrap_or(Path::new(".")).join(rows))?;
    }
    Ok(task)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableStats {
    pub name: String,
    pub rows: usize,
    pub columns: usize,
    pub time_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTypeStats {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub origin: String,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub total_nodes: usize,
    pub total_edges: usize,
    pub edge_types: Vec<EdgeTypeStats>,
}

impl GraphStats {
    fn of(g: &RelGraph) -> Self {
        let origin = |o: EdgeOrigin| match o {
            EdgeOrigin::Fk => "fk",
            EdgeOrigin::FkReverse => "fk-reverse",
            EdgeOrigin::FkPair => "fk-pair",
        };
        Self {
            total_nodes: g.total_nodes(),
            total_edges: g.total_edges(),
            edge_types: g
                .edge_types
                .iter()
                .zip(&g.adjacency)
                .map(|(m, a)| EdgeTypeStats {
                    name: m.name.clone(),
                    src: g.node_types[m.src].name.clone(),
                    dst: g.node_types[m.dst].name.clone(),
                    origin: origin(m.origin).to_string(),
                    edges: a.num_edges(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub table: String,
    pub column: String,
    pub references_table: String,
    pub null_count: usize,
    pub dangling_count: usize,
}

impl From<&RelationDiagnostics> for RelationStats {
    fn from(r: &RelationDiagnostics) -> Self {
        Self {
            table: r.table.clone(),
            column: r.column.clone(),
            references_table: r.references_table.clone(),
            null_count: r.null_count,
            dangling_count: r.dangling_count,
        }
    }
}

/// Output of `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub tables: Vec<TableStats>,
    pub relations: Vec<RelationStats>,
    pub parse_warnings: usize,
    pub graph: GraphStats,
    /// The graph after FK-pair augmentation.
    pub augmented: GraphStats,
}

pub(crate) fn ingest(a: &IngestArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("ingest", seed, serde_json::to_value(a)?);
    let db = load_db(&a.db, &mut run)?;
    let graph = build_graph(&db);
    let aug = augment_fk_pairs(&graph, &db);
    let report = IngestReport {
        tables: db
            .tables
            .iter()
            .zip(&db.schema.tables)
            .map(|(t, s)| TableStats {
                name: t.name.clone(),
                rows: t.n_rows,
                columns: t.columns.len(),
                time_column: s.time_column.clone(),
            })
            .collect(),
        relations: db.diagnostics.relations.iter().map(RelationStats::from).collect(),
        parse_warnings: db.diagnostics.parse_warnings,
        graph: GraphStats::of(&graph),
        augmented: GraphStats::of(&aug),
    };
    run.emit_json(a.out.as_deref(), &envelope("ingest", report))?;
    run.finish()
}

fn profile_task(db: &Database, graph: &RelGraph, task: &TaskTable, a: &ProfileArgs, seed: u64) -> TaskEmbedding {
    let note = |what: &str, err: &dyn std::fmt::Display| eprintln!("warning: {}: {what}: {err}", task.name);
    let summary = aggregate_labels(task, None);
    let hp = homophily::profile(graph, &task.entity_table, &summary, ProfileOptions::default())
        .map_err(|e| note("homophily", &e))
        .ok();
    let walks = walk_features(
        graph,
        task,
        &WalkConfig { walks: a.walks, length: a.walk_length, max_seeds: a.max_seeds, seed },
    )
    .map_err(|e| note("walks", &e))
    .ok();
    let entity_mean = a.heuristic.then(|| entity_mean_heuristic(task).map_err(|e| note("entity mean", &e)).ok());
    let probes: Option<AffinityReport> = a.probes.then(|| {
        sketch::affinity_scores(db, graph, task, &AffinityConfig { seed, ..Default::default() })
            .map_err(|e| note("probes", &e))
            .unwrap_or_default()
    });
    assemble_embedding(
        &task.name,
        &EmbeddingInputs {
            profile: hp.as_ref(),
            lag1: temporal_autocorr(task, 1),
            lag2: temporal_autocorr(task, 2),
            walks: walks.as_ref(),
            train_rows: task.count(Split::Train),
            val_rows: task.count(Split::Val),
            entity_mean,
            probes: probes.as_ref(),
            budget: a.budget.map(|b| b as f64),
        },
    )
}

pub(crate) fn profile(a: &ProfileArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("profile", seed, serde_json::to_value(a)?);
    let db = load_db(&a.db, &mut run)?;
    let graph = augment_fk_pairs(&build_graph(&db), &db);
    let mut embs = Vec::with_capacity(a.task.len());
    for path in &a.task {
        let task = load_task_file(path, &db, &mut run)?;
        embs.push(profile_task(&db, &graph, &task, a, seed));
    }
    let bytes = if let [one] = embs.as_slice() {
        to_json(one)?
    } else {
        let mut out = Vec::new();
        for e in &embs {
            out.extend(serde_json::to_vec(e)?);
            out.push(b'\n');
        }
        out
    };
    run.emit(a.out.as_deref(), &bytes)?;
    run.finish()
}

fn check_embedding(e: TaskEmbedding, path: &Path) -> Result<TaskEmbedding> {
    if e.registry_version != REGISTRY_VERSION {
        bail!(
            "{}: embedding `{}` has registry_version {} (expected {REGISTRY_VERSION})",
            path.display(),
            e.task,
            e.registry_version
        );
    }
    Ok(e)
}

/// Embeddings from a file holding one JSON object or JSON lines.
pub fn read_embeddings(path: &Path) -> Result<Vec<TaskEmbedding>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(one) = serde_json::from_str::<TaskEmbedding>(&text) {
        return Ok(vec![check_embedding(one, path)?]);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let e = serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1))?;
            check_embedding(e, path)
        })
        .collect()
}

pub(crate) fn homophily(a: &HomophilyArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("homophily", seed, serde_json::to_value(a)?);
    let db = load_db(&a.db, &mut run)?;
    let base = build_graph(&db);
    let graph = if a.no_fk_pairs { base } else { augment_fk_pairs(&base, &db) };
    let task = load_task_file(&a.task, &db, &mut run)?;
    let opts = ProfileOptions {
        metapaths: MetapathOptions { max_legs: a.max_legs },
        weighting: match a.weighting {
            WeightingArg::Unweighted => Weighting::Unweighted,
            WeightingArg::Witness => Weighting::Witness,
        },
    };
    let p: HomophilyProfile = homophily::profile(&graph, &task.entity_table, &aggregate_labels(&task, None), opts)?;
    run.emit_json(a.out.as_deref(), &envelope("homophily", p))?;
    run.finish()
}

/// `source_id,f0..f{d-1}` rows; floats use the shortest round-trip form.
fn feature_csv(ids: &[String], rows: &[Vec<f64>]) -> String {
    let d = rows.first().map_or(0, Vec::len);
    let mut out = String::from("source_id");
    (0..d).for_each(|k| write!(out, ",f{k}").expect("string write"));
    out.push('\n');
    for (id, row) in ids.iter().zip(rows) {
        out.push_str(id);
        row.iter().for_each(|x| write!(out, ",{x}").expect("string write"));
        out.push('\n');
    }
    out
}

/// Inverse of the `sketch` CSV output: source ids and feature rows.
pub fn read_feature_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty feature file")?;
    if !header.starts_with("source_id") {
        bail!("{}: missing source_id header", path.display());
    }
    let (mut ids, mut rows) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let mut cells = line.split(',');
        ids.push(cells.next().unwrap_or_default().to_string());
        let row = cells
            .map(|c| c.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{} row {}", path.display(), i + 2))?;
        rows.push(row);
    }
    Ok((ids, rows))
}

pub(crate) fn sketch(a: &SketchArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("sketch", seed, serde_json::to_value(a)?);
    let db = load_db(&a.db, &mut run)?;
    let base = build_graph(&db);
    let graph = if a.fk_pairs { augment_fk_pairs(&base, &db) } else { base };
    let t = graph
        .node_type_index(&a.source_type)
        .with_context(|| format!("unknown node type `{}`", a.source_type))?;
    let table = db.table(&a.source_type).with_context(|| format!("no table `{}`", a.source_type))?;
    let tg = TypedGraph::from_rel(&graph);
    let offset = tg.type_offset(t);
    let sources: Vec<usize> = (offset..offset + tg.type_count(t)).collect();
    let mode = match a.mode {
        ModeArg::Dense => SketchMode::Dense,
        ModeArg::Tensor => SketchMode::Tensor,
    };
    let m = sketch::sketch(&tg, &SketchConfig::new(mode, a.d, a.horizon, seed), &sources)?;
    let ids: Vec<String> = m.sources.iter().map(|&v| table.keys[v - offset].clone()).collect();
    run.emit(a.out.as_deref(), feature_csv(&ids, &m.rows).as_bytes())?;
    if let (Some(task_path), Some(out)) = (&a.task, &a.affinity_out) {
        let task = load_task_file(task_path, &db, &mut run)?;
        let report = sketch::affinity_scores(&db, &graph, &task, &AffinityConfig { seed, ..Default::default() })?;
        run.emit_json(Some(out), &envelope("affinity", report))?;
    }
    run.finish()
}
