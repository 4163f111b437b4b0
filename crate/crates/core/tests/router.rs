use indexmap::IndexMap;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdbprofile::bank::{BankRecord, SelectBy, SimilarityMatrix};
use rdbprofile::rdb::*;
use rdbprofile::router::*;
use rdbprofile::Family;
use serde_json::{json, Value};

// ---------- fixtures ----------

/// `n` users plus a `links` table whose rows connect user pairs.
fn user_db(n: usize, links: &[(usize, usize)]) -> Database {
    let schema = Schema::from_json(
        r#"{"tables": [
        {"name": "users", "file": "users.csv", "primary_key": "id",
         "columns": [{"name": "id", "kind": "categorical"}]},
        {"name": "links", "file": "links.csv", "primary_key": "id",
         "foreign_keys": [{"column": "a", "references_table": "users"},
                          {"column": "b", "references_table": "users"}],
         "columns": [{"name": "id", "kind": "categorical"}, {"name": "a", "kind": "categorical"},
                     {"name": "b", "kind": "categorical"}]}
    ]}"#,
    )
    .unwrap();
    let users = RawRecords { headers: vec!["id".into()], rows: (0..n).map(|u| vec![format!("u{u}")]).collect() };
    let links = RawRecords {
        headers: vec!["id".into(), "a".into(), "b".into()],
        rows: links
            .iter()
            .enumerate()
            .map(|(k, (a, b))| vec![format!("l{k}"), format!("u{a}"), format!("u{b}")])
            .collect(),
    };
    Database::from_records(schema, vec![users, links]).unwrap()
}

fn header(target: TargetKind, metric: MetricName) -> TaskHeader {
    TaskHeader {
        name: "task".into(),
        entity_table: "users".into(),
        entity_column: "id".into(),
        time_column: "ts".into(),
        target,
        metric: MetricSpec { name: metric, higher_is_better: metric.default_higher_is_better() },
        rows_file: "rows.csv".into(),
        time_format: TimeFormat::Epoch,
    }
}

/// rows: (user, timestamp, label, split)
fn task(db: &Database, target: TargetKind, metric: MetricName, rows: &[(usize, i64, f64, &str)]) -> TaskTable {
    let raw: Vec<[String; 4]> = rows
        .iter()
        .map(|&(u, t, y, s)| [format!("u{u}"), t.to_string(), y.to_string(), s.to_string()])
        .collect();
    task_from_strings(&header(target, metric), &raw, db).unwrap()
}

const BIN: TargetKind = TargetKind::Classification { num_classes: 2 };

// ---------- temporal + heuristic ----------

#[test]
fn autocorrelation_examples() {
    let db = user_db(3, &[]);
    let seq = |ys: &[f64]| -> Vec<(usize, i64, f64, &'static str)> {
        (0..3)
            .flat_map(|u| ys.iter().enumerate().map(move |(t, &y)| (u, t as i64, y, "train")))
            .chain([(0, 99, 0.0, "val")])
            .collect()
    };
    let constant = task(&db, BIN, MetricName::RocAuc, &seq(&[1.0, 1.0, 1.0, 1.0]));
    assert_eq!(temporal_autocorr(&constant, 1), None);
    let alt = task(&db, BIN, MetricName::RocAuc, &seq(&[0.0, 1.0, 0.0, 1.0, 0.0]));
    assert!((temporal_autocorr(&alt, 1).unwrap() + 1.0).abs() < 1e-12);
    assert!((temporal_autocorr(&alt, 2).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn entity_mean_heuristic_examples() {
    let db = user_db(3, &[]);
    let t = task(
        &db,
        TargetKind::Regression,
        MetricName::Mae,
        &[(0, 1, 2.0, "train"), (0, 2, 4.0, "train"), (1, 1, 5.0, "train"), (0, 3, 3.0, "val"), (1, 3, 5.0, "val")],
    );
    assert_eq!(entity_mean_heuristic(&t).unwrap(), 0.0);
    let unseen = task(&db, TargetKind::Regression, MetricName::Mae, &[(0, 1, 2.0, "train"), (2, 3, 5.0, "val")]);
    assert_eq!(entity_mean_heuristic(&unseen).unwrap(), 5.0);
    let one_class = task(&db, BIN, MetricName::RocAuc, &[(0, 1, 1.0, "train"), (1, 2, 1.0, "val"), (2, 2, 1.0, "val")]);
    assert!(entity_mean_heuristic(&one_class).is_err());
}

// ---------- walks ----------

fn clustered(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    (0..3 * n)
        .map(|_| {
            let side = rng.random_range(0..2) * half;
            (side + rng.random_range(0..half), side + rng.random_range(0..half))
        })
        .collect()
}

fn two_step_rows(n: usize, label: impl Fn(usize) -> f64) -> Vec<(usize, i64, f64, &'static str)> {
    (0..n)
        .flat_map(|u| [(u, 1, label(u), "train"), (u, 2, label(u), "train")])
        .chain([(0, 3, 0.0, "val")])
        .collect()
}

#[test]
fn walks_on_planted_clusters() {
    for seed in 0..10 {
        let db = user_db(40, &clustered(40, seed));
        let g = augment_fk_pairs(&build_graph(&db), &db);
        let t = task(&db, BIN, MetricName::RocAuc, &two_step_rows(40, |u| (u >= 20) as u8 as f64));
        let w = walk_features(&g, &t, &WalkConfig { seed, ..WalkConfig::default() }).unwrap();
        assert!(w.mean_same_class_ratio_ignore.unwrap() >= 0.95, "{w:?}");
        assert!(w.sparsity_ratio < 1.0 && w.mean_past_task_nodes > 0.0);
    }
}

#[test]
fn walks_single_class_and_isolated() {
    let db = user_db(10, &clustered(10, 3));
    let g = augment_fk_pairs(&build_graph(&db), &db);
    let t = task(&db, BIN, MetricName::RocAuc, &two_step_rows(10, |_| 0.0));
    let w = walk_features(&g, &t, &WalkConfig::default()).unwrap();
    assert_eq!(w.mean_same_class_ratio_ignore, Some(1.0));
    assert_eq!(w.adjusted_mean_same_class_ratio, Some(0.0));

    let db = user_db(10, &[]);
    let g = build_graph(&db);
    let t = task(&db, BIN, MetricName::RocAuc, &two_step_rows(10, |u| (u % 2) as f64));
    let w = walk_features(&g, &t, &WalkConfig::default()).unwrap();
    assert_eq!(w.sparsity_ratio, 1.0);
    assert_eq!(w.mean_same_class_ratio_ignore, None);
    let again = walk_features(&g, &t, &WalkConfig::default()).unwrap();
    assert_eq!(w, again);
}

// ---------- embeddings ----------

fn emb(task: &str, values: &[Option<f64>]) -> TaskEmbedding {
    let reg = FeatureRegistry::new(false, false, false);
    let features: IndexMap<String, Option<f64>> = reg.names.iter().cloned().zip(values.iter().copied()).collect();
    TaskEmbedding::new(task, features)
}

#[test]
fn assembled_embedding_layout() {
    let walks = WalkFeatures {
        mean_same_class_ratio_ignore: Some(0.5),
        adjusted_mean_same_class_ratio: Some(0.1),
        sparsity_ratio: 0.2,
        mean_past_task_nodes: 1.5,
    };
    let inputs = EmbeddingInputs {
        lag1: Some(0.3),
        lag2: Some(0.1),
        walks: Some(&walks),
        train_rows: 100,
        val_rows: 50,
        ..Default::default()
    };
    let e = assemble_embedding("t", &inputs);
    assert_eq!(e.names(), BASE_FEATURES.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    assert_eq!(e.features["log_total_rows"], Some(151f64.ln()));
    assert_eq!(e.imputed.len(), 5);
    assert!(e.imputed.iter().all(|n| n.starts_with("h_adjs_corr")));
    let with_budget = assemble_embedding("t", &EmbeddingInputs { budget: Some(30.0), ..inputs });
    assert_eq!(with_budget.features.last().unwrap(), (&BUDGET_FEATURE.to_string(), &Some(30.0)));
}

#[test]
fn normalizer_moments_and_idempotence() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bank: Vec<TaskEmbedding> = (0..9)
        .map(|i| {
            let v: Vec<Option<f64>> =
                (0..12).map(|j| if (i + j) % 5 == 0 { None } else { Some(rng.random_range(-3.0..7.0)) }).collect();
            emb(&format!("t{i}"), &v)
        })
        .collect();
    let norm = Normalizer::fit(&bank).unwrap();
    let z: Vec<NormalizedEmbedding> = bank.iter().map(|e| norm.transform(e).unwrap()).collect();
    for j in 0..12 {
        let col: Vec<f64> = z.iter().map(|e| e.values[j]).collect();
        let m = col.iter().sum::<f64>() / 9.0;
        let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 9.0;
        assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-9, "feature {j}: {m} {v}");
    }
    let again: Vec<TaskEmbedding> =
        z.iter().map(|e| emb(&e.task, &e.values.iter().map(|&x| Some(x)).collect::<Vec<_>>())).collect();
    let norm2 = Normalizer::fit(&again).unwrap();
    assert!(norm2.mean.iter().all(|m| m.abs() < 1e-9));
    assert!(norm2.std.iter().all(|s| (s - 1.0).abs() < 1e-9));
    assert!(z[0].imputed.contains(&"h_adjs_corr_mean".to_string()));
}

fn normalized(task: &str, v: &[f64]) -> NormalizedEmbedding {
    NormalizedEmbedding { task: task.into(), values: v.to_vec(), imputed: vec![] }
}

#[test]
fn embedding_similarity_examples() {
    let (sim, diag) = embedding_similarity(&[
        normalized("a", &[1.0, 0.0]),
        normalized("b", &[1.0, 0.0]),
        normalized("c", &[0.0, 2.0]),
        normalized("d", &[-1.0, 0.0]),
        normalized("z", &[0.0, 0.0]),
    ]);
    assert_eq!(sim.get("a", "b"), Some(1.0));
    assert_eq!(sim.get("a", "c"), Some(0.0));
    assert_eq!(sim.get("a", "d"), Some(-1.0));
    assert_eq!(sim.get("a", "z"), Some(0.0));
    assert_eq!(diag.len(), 1);
}

fn matrix(tasks: &[&str], f: impl Fn(usize, usize) -> f64) -> SimilarityMatrix {
    let n = tasks.len();
    SimilarityMatrix {
        tasks: tasks.iter().map(|s| s.to_string()).collect(),
        values: (0..n).map(|i| (0..n).map(|j| Some(if i == j { 1.0 } else { f(i, j) })).collect()).collect(),
    }
}

#[test]
fn agreement_examples() {
    let names = ["a", "b", "c", "d", "e"];
    let gt = matrix(&names, |i, j| -((i as f64) - (j as f64)).abs());
    assert_eq!(similarity_agreement(&gt, &gt).unwrap().mean, 1.0);
    let rev = matrix(&names, |i, j| ((i as f64) - (j as f64)).abs());
    assert_eq!(similarity_agreement(&rev, &gt).unwrap().mean, -1.0);

    // planted: points on a circle, gt = negative angular distance
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let angles: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..3.0)).collect();
    let names: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let gt = matrix(&refs, |i, j| -(angles[i] - angles[j]).abs());
    let embs: Vec<NormalizedEmbedding> =
        angles.iter().zip(&names).map(|(a, n)| normalized(n, &[a.cos(), a.sin()])).collect();
    let (sim, _) = embedding_similarity(&embs);
    assert!(similarity_agreement(&sim, &gt).unwrap().mean >= 0.9);
}

#[test]
fn projection_examples() {
    let names = ["a", "b", "c", "d"];
    let embs: Vec<NormalizedEmbedding> = [[1.0, 0.1], [0.9, 0.3], [-1.0, 0.2], [-0.8, -0.5]]
        .iter()
        .zip(names)
        .map(|(v, n)| normalized(n, v))
        .collect();
    let gt = matrix(&names, |i, j| if (i < 2) == (j < 2) { 1.0 } else { -1.0 });
    let zero = train_projection(&embs, &gt, &ProjectionConfig { steps: 0, ..Default::default() }).unwrap();
    assert_eq!(zero.g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert_eq!(zero.agreement_before, zero.agreement_after);
    // clusters already separated by far more than the margin
    let sep = train_projection(&embs, &gt, &ProjectionConfig { margin: 0.01, ..Default::default() }).unwrap();
    assert_eq!(sep.loss_before, 0.0);
    assert_eq!(sep.g, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
}

#[test]
fn projection_recovers_planted_structure() {
    // gt similarity depends on feature 0 only; feature 1 is large noise
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let names: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
    let raw: Vec<[f64; 2]> = (0..20).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0)]).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let gt = matrix(&refs, |i, j| if (raw[i][0] > 0.0) == (raw[j][0] > 0.0) { 1.0 } else { -1.0 });
    let embs: Vec<NormalizedEmbedding> = raw.iter().zip(&names).map(|(v, n)| normalized(n, v)).collect();
    let r = train_projection(&embs, &gt, &ProjectionConfig { margin: 0.5, steps: 300, step_size: 0.5 }).unwrap();
    assert!(r.loss_after < r.loss_before);
    assert!(r.agreement_after.unwrap() >= r.agreement_before.unwrap());
}

// ---------- meta-classifiers ----------

fn sample(task: &str, x: f64, y: f64, winner: Family) -> MetaSample {
    let mut v = vec![Some(0.0); 12];
    v[0] = Some(x);
    v[1] = Some(y);
    MetaSample { embedding: emb(task, &v), winner, margin: 0.0 }
}

#[test]
fn knn_examples() {
    let s = vec![
        sample("a", 0.0, 1.0, Family::Rdl),
        sample("b", 1.0, 0.0, Family::Rdl),
        sample("c", -1.0, 0.0, Family::Dfs),
        sample("d", 5.0, 5.0, Family::Dfs),
    ];
    let m1 = fit_meta(&s, MetaKind::Knn { k: 1 }).unwrap();
    let d = m1.predict(&s[2].embedding).unwrap();
    assert_eq!((d.family, d.confidence), (Family::Dfs, 1.0));
    // triangle centred at the origin with equal per-axis variance, so
    // normalization keeps the origin equidistant from all three
    let h = 3f64.sqrt() / 2.0;
    let tri = vec![
        sample("a", 0.0, 1.0, Family::Rdl),
        sample("b", h, -0.5, Family::Dfs),
        sample("c", -h, -0.5, Family::Rdl),
    ];
    let m3 = fit_meta(&tri, MetaKind::Knn { k: 3 }).unwrap();
    let q = sample("q", 0.0, 0.0, Family::Rdl).embedding;
    let d = m3.predict(&q).unwrap();
    assert_eq!(d.family, Family::Rdl);
    assert!((d.confidence - 2.0 / 3.0).abs() < 1e-9, "{}", d.confidence);
    assert_eq!(d.neighbors.len(), 3);
    assert!(fit_meta(&s, MetaKind::Knn { k: 2 }).is_err());
    let single: Vec<MetaSample> = s.iter().cloned().map(|mut x| {
        x.winner = Family::Rdl;
        x
    }).collect();
    assert_eq!(fit_meta(&single, MetaKind::Logistic), Err(RouterError::SingleFamilyBank));
    assert_eq!(loo_eval(&s[..2], MetaKind::Logistic), Err(RouterError::TooFewTasks(2)));
}

fn planted(n: usize, seed: u64) -> Vec<MetaSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let (x, y): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        if (x + y - 1.0).abs() < 0.1 {
            continue;
        }
        let w = if x + y < 1.0 { Family::Rdl } else { Family::Dfs };
        out.push(sample(&format!("t{}", out.len()), x, y, w));
    }
    out
}

#[test]
fn separable_plant_is_perfect_for_both_kinds() {
    let s = planted(24, 1);
    for kind in [MetaKind::Knn { k: 3 }, MetaKind::Logistic] {
        assert_eq!(loo_eval(&s, kind).unwrap().accuracy, 1.0, "{kind:?}");
    }
}

#[test]
fn shuffled_winners_score_near_majority_rate() {
    let base = planted(24, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut acc, mut maj) = (0.0, 0.0);
    for _ in 0..50 {
        let mut s = base.clone();
        for x in s.iter_mut() {
            x.winner = if rng.random_bool(0.5) { Family::Rdl } else { Family::Dfs };
        }
        let r = loo_eval(&s, MetaKind::Knn { k: 3 }).unwrap();
        acc += r.accuracy / 50.0;
        maj += r.majority_rate / 50.0;
    }
    assert!((acc - maj).abs() <= 0.10, "accuracy {acc} majority {maj}");
}

#[test]
fn budget_routing() {
    // small budgets favor dfs on tasks with x < 0.5
    let mut s = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in 0..12 {
        let x: f64 = rng.random_range(0.0..1.0);
        for b in [3.0, 10.0, 30.0] {
            let mut m = sample(&format!("t{t}"), x, 0.0, Family::Rdl);
            m.embedding = m.embedding.with_budget(b);
            m.winner = if x < 0.5 && b < 20.0 { Family::Dfs } else { Family::Rdl };
            s.push(m);
        }
    }
    let r = loo_eval(&s, MetaKind::Knn { k: 3 }).unwrap();
    assert!(r.accuracy >= 0.85, "{}", r.accuracy);
    let meta = fit_meta(&s, MetaKind::Knn { k: 3 }).unwrap();
    let plain = sample("q", 0.2, 0.0, Family::Rdl).embedding;
    assert_eq!(route(&meta, &plain, Some(3.0)).unwrap().family, Family::Dfs);
    assert_eq!(route(&meta, &plain, Some(30.0)).unwrap().family, Family::Rdl);
    assert!(matches!(route(&meta, &plain, None), Err(RouterError::BudgetMismatch(_))));
    let no_budget = fit_meta(&planted(10, 5), MetaKind::Knn { k: 3 }).unwrap();
    assert!(route(&no_budget, &plain, None).is_ok());
    assert!(matches!(route(&no_budget, &plain, Some(3.0)), Err(RouterError::BudgetMismatch(_))));
}

#[test]
fn routing_ignores_positive_score_scaling() {
    let mut bank = Vec::new();
    let mut embs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in 0..8 {
        let name = format!("t{t}");
        for (f, cfg) in [(Family::Rdl, "a"), (Family::Rdl, "b"), (Family::Dfs, "c")] {
            bank.push(BankRecord {
                task: name.clone(),
                family: f,
                config: [("m".to_string(), json!(cfg))].into_iter().collect(),
                val_score: rng.random_range(0.5..1.0),
                test_score: rng.random_range(0.5..1.0),
                metric: "roc_auc".into(),
                higher_is_better: true,
                trial: None,
            });
        }
        embs.push(sample(&name, rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), Family::Rdl).embedding);
    }
    let scaled: Vec<BankRecord> = bank
        .iter()
        .cloned()
        .map(|mut r| {
            r.val_score *= 7.5;
            r.test_score *= 7.5;
            r
        })
        .collect();
    let (a, _) = samples_from_bank(&bank, &embs, SelectBy::Val);
    let (b, _) = samples_from_bank(&scaled, &embs, SelectBy::Val);
    let wa: Vec<Family> = a.iter().map(|s| s.winner).collect();
    let wb: Vec<Family> = b.iter().map(|s| s.winner).collect();
    assert_eq!(wa, wb);
}

// ---------- TPE + replay ----------

fn unit_space() -> SearchSpace {
    SearchSpace {
        dims: vec![
            Dimension { name: "x".into(), kind: DimensionKind::Numeric { low: 0.0, high: 1.0, log: false, grid: None } },
            Dimension {
                name: "lr".into(),
                kind: DimensionKind::Numeric { low: 1e-4, high: 1e-1, log: true, grid: None },
            },
            Dimension { name: "agg".into(), kind: DimensionKind::Categorical { values: vec![json!("sum"), json!("mean"), json!("max")] } },
        ],
    }
}

fn cfg(x: f64, lr: f64, agg: &str) -> Config {
    [("x".to_string(), json!(x)), ("lr".to_string(), json!(lr)), ("agg".to_string(), json!(agg))]
        .into_iter()
        .collect()
}

#[test]
fn tpe_short_history_is_uniform_and_in_bounds() {
    let space = unit_space();
    let hist = vec![Trial { config: cfg(0.1, 0.01, "sum"), objective: 1.0 }];
    let s = suggest_tpe(&space, &hist, 10, true, &TpeConfig::default(), 1);
    assert_eq!(s.len(), 10);
    assert!(s.iter().all(|c| space.contains(c)));
    assert_eq!(s, suggest_tpe(&space, &hist, 10, true, &TpeConfig::default(), 1));
}

#[test]
fn tpe_follows_good_region() {
    let space = unit_space();
    let mut inside = 0;
    let mut total = 0;
    let mut agg_hits = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hist: Vec<Trial> = (0..20)
            .map(|_| {
                let x: f64 = rng.random_range(0.0..1.0);
                let agg = ["sum", "mean", "max"][rng.random_range(0..3)];
                let c = cfg(x, 0.01, agg);
                // good iff x < 0.5, and "max" adds a bonus
                Trial { config: c, objective: (x < 0.5) as u8 as f64 + 0.5 * (agg == "max") as u8 as f64 }
            })
            .collect();
        let s = suggest_tpe(&space, &hist, 4, true, &TpeConfig::default(), seed);
        for c in &s {
            total += 1;
            inside += (c["x"].as_f64().unwrap() < 0.5) as usize;
            agg_hits += (c["agg"] == json!("max")) as usize;
        }
    }
    assert!(inside as f64 >= 0.8 * total as f64, "{inside}/{total}");
    assert!(agg_hits * 3 > total, "{agg_hits}/{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tpe_suggestions_stay_in_space(seed in any::<u64>(), objs in proptest::collection::vec(-5.0..5.0f64, 0..15)) {
        let space = unit_space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hist: Vec<Trial> = objs.iter().map(|&o| Trial {
            config: space.sample_uniform(&mut rng),
            objective: o,
        }).collect();
        for c in suggest_tpe(&space, &hist, 8, seed % 2 == 0, &TpeConfig::default(), seed) {
            prop_assert!(space.contains(&c));
        }
    }
}

fn grid_space() -> SearchSpace {
    SearchSpace {
        dims: vec![
            Dimension { name: "a".into(), kind: DimensionKind::Numeric { low: 0.0, high: 9.0, log: false, grid: Some(10) } },
            Dimension { name: "b".into(), kind: DimensionKind::Numeric { low: 0.0, high: 4.0, log: false, grid: Some(5) } },
            Dimension {
                name: "c".into(),
                kind: DimensionKind::Categorical { values: vec![json!("p"), json!("q"), json!("r"), json!("s")] },
            },
        ],
    }
}

fn surface(c: &Config) -> f64 {
    let a = c["a"].as_f64().unwrap();
    let b = c["b"].as_f64().unwrap();
    let bonus = match c["c"].as_str().unwrap() {
        "r" => 1.0,
        "q" => 0.5,
        _ => 0.0,
    };
    -(a - 6.0).powi(2) / 4.0 - (b - 1.0).powi(2) + bonus
}

fn evaluate(c: &Config) -> Option<Outcome> {
    Some(Outcome { val: surface(c), test: Some(surface(c)), family: None, landscape: None, resolved: None })
}

#[test]
fn exhaustive_budget_finds_optimum() {
    let space = grid_space();
    assert_eq!(space.size(), Some(200));
    let best = space.enumerate().unwrap().iter().map(surface).fold(f64::NEG_INFINITY, f64::max);
    for g in [Generator::Random, Generator::Tpe] {
        let r = replay_hpo(&evaluate, &space, &HpoOptions::new(200, g, 3, true)).unwrap();
        assert_eq!(r.val_score, best);
        assert_eq!(r.trajectory.len(), 200);
        let r = replay_hpo(&evaluate, &space, &HpoOptions::new(250, g, 3, true)).unwrap();
        assert!(r.exhausted && r.trajectory.len() == 200);
    }
}

#[test]
fn replay_is_deterministic() {
    let space = grid_space();
    let a = replay_hpo(&evaluate, &space, &HpoOptions::new(30, Generator::Tpe, 11, true)).unwrap();
    let b = replay_hpo(&evaluate, &space, &HpoOptions::new(30, Generator::Tpe, 11, true)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn routing_to_planted_family_helps_search() {
    // dfs configs dominate rdl configs on this task
    let mut bank = Vec::new();
    for f in [Family::Rdl, Family::Dfs] {
        for k in 0..10 {
            let base = if f == Family::Dfs { 0.8 } else { 0.6 };
            let s = base + 0.01 * k as f64;
            bank.push(BankRecord {
                task: "t".into(),
                family: f,
                config: [("k".to_string(), json!(k))].into_iter().collect(),
                val_score: s,
                test_score: s,
                metric: "roc_auc".into(),
                higher_is_better: true,
                trial: None,
            });
        }
    }
    let ev = BankEvaluator::new(&bank, "t").unwrap();
    let space = ev.space();
    let (mut routed, mut agnostic) = (0.0, 0.0);
    for seed in 0..20 {
        let mut o = HpoOptions::new(4, Generator::Random, seed, true);
        agnostic += replay_hpo(&ev, &space, &o).unwrap().test_score.unwrap();
        o.family = Some(Family::Dfs);
        let r = replay_hpo(&ev, &space, &o).unwrap();
        assert!(r.trajectory.iter().all(|t| t.outcome.family == Some(Family::Dfs)));
        routed += r.test_score.unwrap();
    }
    assert!(routed > agnostic);
    let empty = space.restrict(FAMILY_DIM, &[Value::from("gbdt")]);
    assert!(matches!(empty, Err(RouterError::EmptySpace(_))));
}

#[test]
fn budget_winners_follow_search_difficulty() {
    // dfs: every config is decent; rdl: one excellent config among many poor
    let mut bank = Vec::new();
    for k in 0..20 {
        let s = if k == 7 { 0.95 } else { 0.5 };
        bank.push(record("t", Family::Rdl, k, s));
    }
    for k in 0..4 {
        bank.push(record("t", Family::Dfs, k, 0.8));
    }
    let ws = budget_winners(&bank, "t", &[1, 20], 8, Generator::Random).unwrap();
    assert_eq!(ws[0].family, Family::Dfs);
    assert_eq!(ws[1].family, Family::Rdl);
    assert!(ws[1].margin > 0.0 && ws[0].margin < 0.0);
    let e = sample("t", 0.0, 0.0, Family::Rdl).embedding;
    let (s, skipped) = budget_samples(&bank, &[e], &[1, 20], 8, Generator::Random);
    assert!(skipped.is_empty());
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].embedding.features[BUDGET_FEATURE], Some(1.0));
}

fn record(task: &str, family: Family, k: i64, s: f64) -> BankRecord {
    BankRecord {
        task: task.into(),
        family,
        config: [("k".to_string(), json!(k))].into_iter().collect(),
        val_score: s,
        test_score: s,
        metric: "roc_auc".into(),
        higher_is_better: true,
        trial: None,
    }
}
