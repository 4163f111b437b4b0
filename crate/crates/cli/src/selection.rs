use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rdbprofile::bank::{
    graphgym_similarity, load_bank, parse_bank, winners, BankRecord, SelectBy, SimilarityMatrix, SimilarityOptions,
};
use rdbprofile::landscape::{landscape_metrics, post_select, Candidate, LandscapeMetrics, LossSurfaceGrid, PostSelection};
use rdbprofile::router::{
    budget_samples, embedding_similarity, fit_meta, loo_eval, replay_hpo, route as route_task, samples_from_bank,
    similarity_agreement, train_projection, AgreementReport, BankEvaluator, Generator, HpoOptions, HpoResult, MetaKind,
    MetaSample, Normalizer, ProjectionConfig, RouteDecision, TaskEmbedding,
};
use rdbprofile::Family;
use serde::{Deserialize, Serialize};

use crate::data::read_embeddings;
use crate::output::{envelope, read_envelope, Run};
use crate::{
    BankCommand, ByArg, DirectionArg, FamilyArg, GeneratorArg, HpoArgs, KindArg, LandscapeArgs, LooArgs, MetaArgs,
    RouteArgs, SimilarityArgs,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReport {
    pub file: String,
    pub family: Family,
    pub metrics: LandscapeMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeOutput {
    pub surfaces: Vec<SurfaceReport>,
    pub post_selection: Option<PostSelection>,
}

pub(crate) fn landscape(a: &LandscapeArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("landscape", seed, serde_json::to_value(a)?);
    ensure!(a.val.is_empty() || a.val.len() == a.files.len(), "--val needs one score per surface file");
    let mut surfaces = Vec::with_capacity(a.files.len());
    for f in &a.files {
        let grid = LossSurfaceGrid::load(f)?;
        run.input(f)?;
        let metrics = landscape_metrics(&grid, a.fallback).with_context(|| f.display().to_string())?;
        surfaces.push(SurfaceReport { file: f.display().to_string(), family: grid.family, metrics });
    }
    let post_selection = if a.val.is_empty() || surfaces.len() < 2 {
        None
    } else {
        let hib = matches!(a.direction, DirectionArg::Higher);
        let cands: Vec<Candidate> = surfaces
            .iter()
            .zip(&a.val)
            .map(|(s, &v)| Candidate {
                id: s.file.clone(),
                val_score: v,
                higher_is_better: hib,
                family: s.family,
                metrics: s.metrics.clone(),
            })
            .collect();
        Some(post_select(&cands)?)
    };
    for s in &surfaces {
        eprintln!("{}: P1 {:.6} P2 {:.6} Pbar {:.6}", s.file, s.metrics.p1, s.metrics.p2, s.metrics.pbar);
    }
    if let Some(ps) = &post_selection {
        eprintln!("post-selected: {}", ps.chosen);
    }
    run.emit_json(a.out.as_deref(), &envelope("landscape", LandscapeOutput { surfaces, post_selection }))?;
    run.finish()
}

fn select_by(b: ByArg) -> SelectBy {
    match b {
        ByArg::Val => SelectBy::Val,
        ByArg::Test => SelectBy::Test,
    }
}

fn generator(g: GeneratorArg) -> Generator {
    match g {
        GeneratorArg::Random => Generator::Random,
        GeneratorArg::Tpe => Generator::Tpe,
    }
}

fn family(f: FamilyArg) -> Family {
    match f {
        FamilyArg::Rdl => Family::Rdl,
        FamilyArg::Dfs => Family::Dfs,
    }
}

fn read_bank(path: &Path, run: &mut Run) -> Result<Vec<BankRecord>> {
    let records = load_bank(path).with_context(|| format!("loading bank {}", path.display()))?;
    run.input(path)?;
    Ok(records)
}

/// Output of `bank similarity`, read back by `similarity --gt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityOutput {
    pub matrix: SimilarityMatrix,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct WinnersOutput {
    winners: Vec<rdbprofile::bank::Winner>,
    skipped: BTreeMap<String, String>,
}

pub(crate) fn bank(cmd: &BankCommand, seed: u64) -> Result<()> {
    let mut run = Run::new("bank", seed, serde_json::to_value(cmd)?);
    match cmd {
        BankCommand::Add { bank, from } => {
            let text = fs::read_to_string(from).with_context(|| format!("reading {}", from.display()))?;
            let new = parse_bank(&text)?;
            run.input(from)?;
            // Rewrite the whole file so the append is atomic.
            let mut bytes = if bank.exists() {
                run.input(bank)?;
                let old = fs::read(bank)?;
                parse_bank(std::str::from_utf8(&old)?)?;
                old
            } else {
                Vec::new()
            };
            if bytes.last().is_some_and(|&b| b != b'\n') {
                bytes.push(b'\n');
            }
            for r in &new {
                bytes.extend(serde_json::to_vec(r)?);
                bytes.push(b'\n');
            }
            run.emit(Some(bank), &bytes)?;
            eprintln!("added {} records to {}", new.len(), bank.display());
        }
        BankCommand::Winners { bank, by, out } => {
            let records = read_bank(bank, &mut run)?;
            let (won, skipped) = winners(&records, select_by(*by));
            let out_val = WinnersOutput { winners: won.into_values().collect(), skipped };
            run.emit_json(out.as_deref(), &envelope("bank winners", out_val))?;
        }
        BankCommand::Similarity { bank, min_shared, out } => {
            let records = read_bank(bank, &mut run)?;
            let opts = SimilarityOptions { min_shared: *min_shared, ..Default::default() };
            let r = graphgym_similarity(&records, &opts)?;
            let out_val = SimilarityOutput { matrix: r.matrix, diagnostics: r.diagnostics };
            run.emit_json(out.as_deref(), &envelope("bank similarity", out_val))?;
        }
    }
    run.finish()
}

fn read_all_embeddings(paths: &[PathBuf], run: &mut Run) -> Result<Vec<TaskEmbedding>> {
    let mut out: Vec<TaskEmbedding> = Vec::new();
    for p in paths {
        for e in read_embeddings(p)? {
            if out.iter().any(|o| o.task == e.task) {
                bail!("duplicate embedding for task `{}`", e.task);
            }
            out.push(e);
        }
        run.input(p)?;
    }
    Ok(out)
}

fn meta_kind(a: &MetaArgs) -> MetaKind {
    match a.kind {
        KindArg::Knn => MetaKind::Knn { k: a.k },
        KindArg::Logistic => MetaKind::Logistic,
    }
}

fn training_samples(
    a: &MetaArgs,
    records: &[BankRecord],
    embs: &[TaskEmbedding],
    budgeted: bool,
) -> (Vec<MetaSample>, BTreeMap<String, String>) {
    if budgeted {
        budget_samples(records, embs, &a.budgets, a.replay_seeds, generator(a.generator))
    } else {
        samples_from_bank(records, embs, select_by(a.by))
    }
}

/// Output of `route`, read back by `hpo --route`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOutput {
    pub task: String,
    pub budget: Option<usize>,
    pub kind: MetaKind,
    pub decision: RouteDecision,
    /// Bank tasks the classifier was trained on; the routed task itself is
    /// always held out.
    pub training_tasks: Vec<String>,
    pub skipped: BTreeMap<String, String>,
}

pub(crate) fn route(a: &RouteArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("route", seed, serde_json::to_value(a)?);
    let records = read_bank(&a.meta.bank, &mut run)?;
    let query = match read_embeddings(&a.embedding)?.as_slice() {
        [one] => one.clone(),
        other => bail!("{}: expected one embedding, found {}", a.embedding.display(), other.len()),
    };
    run.input(&a.embedding)?;
    let mut embs = read_all_embeddings(&a.meta.embeddings, &mut run)?;
    embs.retain(|e| e.task != query.task);
    let (samples, skipped) = training_samples(&a.meta, &records, &embs, a.budget.is_some());
    let kind = meta_kind(&a.meta);
    let meta = fit_meta(&samples, kind)?;
    let decision = route_task(&meta, &query, a.budget.map(|b| b as f64))?;
    let mut training_tasks: Vec<String> = samples.iter().map(|s| s.embedding.task.clone()).collect();
    training_tasks.dedup();
    eprintln!("{}: route to {} (confidence {:.3})", query.task, decision.family, decision.confidence);
    let out = RouteOutput { task: query.task, budget: a.budget, kind, decision, training_tasks, skipped };
    run.emit_json(a.out.as_deref(), &envelope("route", out))?;
    run.finish()
}

pub(crate) fn loo(a: &LooArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("loo", seed, serde_json::to_value(a)?);
    let records = read_bank(&a.meta.bank, &mut run)?;
    let embs = read_all_embeddings(&a.meta.embeddings, &mut run)?;
    let (samples, skipped) = training_samples(&a.meta, &records, &embs, a.budgeted);
    for (t, why) in &skipped {
        eprintln!("warning: skipped {t}: {why}");
    }
    let report = loo_eval(&samples, meta_kind(&a.meta))?;
    eprintln!("LOO accuracy {:.4} (majority {:.4})", report.accuracy, report.majority_rate);
    run.emit_json(a.out.as_deref(), &envelope("loo", report))?;
    run.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct HpoOutput {
    task: String,
    budget: usize,
    generator: Generator,
    family: Option<Family>,
    result: HpoResult,
}

pub(crate) fn hpo(a: &HpoArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("hpo", seed, serde_json::to_value(a)?);
    let records = read_bank(&a.bank, &mut run)?;
    let ev = BankEvaluator::new(&records, &a.task)?;
    let fam = match (&a.family, &a.route) {
        (Some(f), _) => Some(family(*f)),
        (None, Some(p)) => {
            let r: RouteOutput = read_envelope(p, "route")?;
            run.input(p)?;
            ensure!(r.task == a.task, "route output is for task `{}`, not `{}`", r.task, a.task);
            Some(r.decision.family)
        }
        (None, None) => None,
    };
    let space = match fam {
        Some(f) => ev.space_for(f).with_context(|| format!("task `{}` has no {f} records", a.task))?,
        None => ev.space(),
    };
    let mut opts = HpoOptions::new(a.budget, generator(a.generator), seed, ev.higher_is_better());
    opts.family = fam;
    opts.post_select = !a.no_post_select;
    let result = replay_hpo(&ev, &space, &opts)?;
    eprintln!(
        "{}: {} trials, selected #{} val {:.5} test {}",
        a.task,
        result.trajectory.len(),
        result.selected,
        result.val_score,
        result.test_score.map_or("-".into(), |t| format!("{t:.5}"))
    );
    let out = HpoOutput { task: a.task.clone(), budget: a.budget, generator: opts.generator, family: fam, result };
    run.emit_json(a.out.as_deref(), &envelope("hpo", out))?;
    run.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SimilarityReportOut {
    embedding_similarity: SimilarityMatrix,
    diagnostics: Vec<String>,
    agreement: AgreementReport,
    projection: Option<rdbprofile::router::ProjectionResult>,
}

pub(crate) fn similarity(a: &SimilarityArgs, seed: u64) -> Result<()> {
    let mut run = Run::new("similarity", seed, serde_json::to_value(a)?);
    let embs = read_all_embeddings(&a.embeddings, &mut run)?;
    let gt: SimilarityOutput = read_envelope(&a.gt, "bank similarity")?;
    run.input(&a.gt)?;
    let norm = Normalizer::fit(&embs)?;
    let normalized = embs.iter().map(|e| norm.transform(e)).collect::<Result<Vec<_>, _>>()?;
    let (matrix, diagnostics) = embedding_similarity(&normalized);
    let agreement = similarity_agreement(&matrix, &gt.matrix)?;
    let projection = if a.project {
        let cfg = ProjectionConfig { margin: a.margin, steps: a.steps, step_size: a.step_size };
        Some(train_projection(&normalized, &gt.matrix, &cfg)?)
    } else {
        None
    };
    let out = SimilarityReportOut { embedding_similarity: matrix, diagnostics, agreement, projection };
    run.emit_json(a.out.as_deref(), &envelope("similarity", out))?;
    run.finish()
}
