use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdbprofile::rdb::*;
use rdbprofile::sketch::*;
use rdbprofile_testkit::paths;

fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> TypedGraph {
    let n = rng.random_range(2..=max_nodes);
    let n_types = rng.random_range(1..=4);
    let n_edge_types = rng.random_range(1..=6);
    let mut node_type: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_types)).collect();
    node_type.sort_unstable();
    let m = rng.random_range(0..=2 * n);
    let edges: Vec<(usize, usize, usize)> = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n_edge_types)))
        .collect();
    TypedGraph::from_edges(node_type, &edges)
}

fn oracle_bag(g: &TypedGraph, s: usize, t: usize) -> std::collections::BTreeMap<Vec<usize>, f64> {
    let edges: Vec<_> = g.edges().collect();
    paths::path_bag(&edges, s, t, &vec![1.0; t], &vec![1.0; g.num_nodes()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_matches_signed_oracle(seed in any::<u64>(), t in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 30);
        let cfg = SketchConfig::new(SketchMode::Dense, 8, t, seed);
        let sources: Vec<usize> = (0..g.num_nodes()).collect();
        let z = dense_sketch(&g, &cfg, &sources).unwrap();
        for &s in &sources {
            let bag = oracle_bag(&g, s, t);
            for k in 0..8 {
                let want = paths::signed_expansion(&bag, |l, tok| dense_sign(seed, k, l, tok));
                let got = z.rows[s][k];
                prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn tensor_matches_bucketed_oracle(seed in any::<u64>(), t in 1usize..=3, d in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let g = random_graph(&mut rng, 20);
        let cfg = SketchConfig::new(SketchMode::Tensor, d, t, seed);
        let s = rng.random_range(0..g.num_nodes());
        let y = tensor_sketch(&g, &cfg, &[s]).unwrap();
        let mut want = vec![0.0; d];
        for (seq, w) in oracle_bag(&g, s, t) {
            let mut bucket = 0;
            let mut sign = 1.0;
            for (i, &tok) in seq.iter().enumerate() {
                bucket = (bucket + tensor_bucket(seed, d, i + 1, tok)) % d;
                sign *= tensor_sign(seed, i + 1, tok);
            }
            want[bucket] += sign * w;
        }
        for j in 0..d {
            prop_assert!((y.rows[0][j] - want[j]).abs() <= 1e-10 * want[j].abs().max(1.0));
        }
    }

    #[test]
    fn core_oracle_agrees_with_testkit(seed in any::<u64>(), t in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 15);
        let cfg = SketchConfig::new(SketchMode::Dense, 4, t, 0);
        let bag = path_bag_oracle(&g, 0, &cfg, DEFAULT_ORACLE_CAP).unwrap();
        let want = oracle_bag(&g, 0, t);
        prop_assert_eq!(bag.weights.len(), want.len());
        for (seq, w) in want {
            let key: Vec<u32> = seq.iter().map(|&x| x as u32).collect();
            prop_assert_eq!(bag.weights.get(&key).copied(), Some(w));
        }
    }
}

/// Two sources with overlapping typed-path bags.
fn pair_fixture() -> (TypedGraph, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 14;
    let node_type: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let mut edges = Vec::new();
    for _ in 0..30 {
        edges.push((rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..3)));
    }
    edges.extend([(0, 1, 0), (3, 4, 0), (1, 2, 1), (4, 5, 1)]);
    (TypedGraph::from_edges(node_type, &edges), 0, 3)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[test]
fn dense_kernel_is_unbiased_and_concentrates() {
    let (g, s, s2) = pair_fixture();
    let cfg = SketchConfig::new(SketchMode::Dense, 1, 3, 0);
    let b1 = path_bag_oracle(&g, s, &cfg, DEFAULT_ORACLE_CAP).unwrap();
    let b2 = path_bag_oracle(&g, s2, &cfg, DEFAULT_ORACLE_CAP).unwrap();
    let exact = b1.inner(&b2);
    assert!(exact > 0.0);
    let mut sds = Vec::new();
    for d in [64, 128, 256] {
        let est: Vec<f64> = (0..200)
            .map(|seed| {
                let z = dense_sketch(&g, &SketchConfig::new(SketchMode::Dense, d, 3, seed), &[s, s2]).unwrap();
                kernel_estimate(&z.rows[0], &z.rows[1])
            })
            .collect();
        let (m, sd) = mean_sd(&est);
        assert!((m - exact).abs() <= 3.0 * sd / (200f64).sqrt(), "d={d} mean {m} exact {exact}");
        sds.push(sd);
    }
    for w in sds.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 0.5f64.sqrt()).abs() <= 0.3 * 0.5f64.sqrt(), "ratio {ratio}");
    }
}

#[test]
fn tensor_inner_product_is_unbiased() {
    let (g, s, s2) = pair_fixture();
    let cfg = SketchConfig::new(SketchMode::Tensor, 1, 3, 0);
    let exact = path_bag_oracle(&g, s, &cfg, DEFAULT_ORACLE_CAP)
        .unwrap()
        .inner(&path_bag_oracle(&g, s2, &cfg, DEFAULT_ORACLE_CAP).unwrap());
    for d in [64, 128, 256] {
        let est: Vec<f64> = (0..200)
            .map(|seed| {
                let y = tensor_sketch(&g, &SketchConfig::new(SketchMode::Tensor, d, 3, seed), &[s, s2]).unwrap();
                y.rows[0].iter().zip(&y.rows[1]).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        let (m, sd) = mean_sd(&est);
        assert!((m - exact).abs() <= 3.0 * sd / (200f64).sqrt(), "d={d} mean {m} exact {exact}");
    }
}

#[test]
fn disjoint_bags_have_zero_kernel() {
    // 0 -a-> 1 and 2 -b-> 3 with distinct tokens
    let g = TypedGraph::from_edges(vec![0, 1, 2, 3], &[(0, 1, 0), (2, 3, 1), (1, 0, 2)]);
    let est: Vec<f64> = (0..200)
        .map(|seed| {
            let z = dense_sketch(&g, &SketchConfig::new(SketchMode::Dense, 32, 2, seed), &[0, 2]).unwrap();
            kernel_estimate(&z.rows[0], &z.rows[1])
        })
        .collect();
    let (m, sd) = mean_sd(&est);
    assert!(m.abs() <= 3.0 * sd / (200f64).sqrt() + 1e-12);
}

#[test]
fn sketches_are_deterministic() {
    let (g, ..) = pair_fixture();
    let sources: Vec<usize> = (0..g.num_nodes()).collect();
    for mode in [SketchMode::Dense, SketchMode::Tensor] {
        let cfg = SketchConfig::new(mode, 32, 3, 5);
        let a = sketch(&g, &cfg, &sources).unwrap();
        let b = sketch(&g, &cfg, &sources).unwrap();
        assert_eq!(a, b);
        let serial: Vec<Vec<f64>> = sources.iter().map(|&s| sketch(&g, &cfg, &[s]).unwrap().rows.remove(0)).collect();
        assert_eq!(a.rows, serial);
    }
}

/// users with `clicks` and `buys` fact rows; returns the database and the
/// number of clicks and buys per user.
fn activity_db(n: usize, seed: u64) -> (Database, Vec<(usize, usize)>) {
    let schema = Schema::from_json(
        r#"{"tables": [
        {"name": "users", "file": "users.csv", "primary_key": "id",
         "columns": [{"name": "id", "kind": "categorical"}, {"name": "age", "kind": "numeric"}]},
        {"name": "clicks", "file": "clicks.csv", "primary_key": "id",
         "foreign_keys": [{"column": "user", "references_table": "users"}],
         "columns": [{"name": "id", "kind": "categorical"}, {"name": "user", "kind": "categorical"}]},
        {"name": "buys", "file": "buys.csv", "primary_key": "id",
         "foreign_keys": [{"column": "user", "references_table": "users"}],
         "columns": [{"name": "id", "kind": "categorical"}, {"name": "user", "kind": "categorical"}]}
    ]}"#,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::new();
    let mut users = Vec::new();
    let mut clicks = Vec::new();
    let mut buys = Vec::new();
    for u in 0..n {
        let c = rng.random_range(0..6);
        let b = rng.random_range(0..6);
        counts.push((c, b));
        users.push(vec![format!("u{u}"), format!("{}", rng.random_range(18..70))]);
        for _ in 0..c {
            clicks.push(vec![format!("c{}", clicks.len()), format!("u{u}")]);
        }
        for _ in 0..b {
            buys.push(vec![format!("b{}", buys.len()), format!("u{u}")]);
        }
    }
    let rec = |h: &[&str], rows: Vec<Vec<String>>| RawRecords {
        headers: h.iter().map(|s| s.to_string()).collect(),
        rows,
    };
    let db = Database::from_records(
        schema,
        vec![rec(&["id", "age"], users), rec(&["id", "user"], clicks), rec(&["id", "user"], buys)],
    )
    .unwrap();
    (db, counts)
}

fn binary_task(db: &Database, labels: &[u8]) -> TaskTable {
    let header = TaskHeader {
        name: "t".into(),
        entity_table: "users".into(),
        entity_column: "id".into(),
        time_column: "ts".into(),
        target: TargetKind::Classification { num_classes: 2 },
        metric: MetricSpec {
            name: MetricName::RocAuc,
            higher_is_better: true,
        },
        rows_file: "rows.csv".into(),
        time_format: TimeFormat::Epoch,
    };
    let raw: Vec<[String; 4]> = labels
        .iter()
        .enumerate()
        .map(|(u, &y)| {
            let split = if u % 10 < 7 { "train" } else { "val" };
            [format!("u{u}"), u.to_string(), y.to_string(), split.to_string()]
        })
        .collect();
    task_from_strings(&header, &raw, db).unwrap()
}

#[test]
fn planted_path_count_signal_is_recovered() {
    let (db, counts) = activity_db(300, 1);
    let g = augment_fk_pairs(&build_graph(&db), &db);
    let labels: Vec<u8> = counts.iter().map(|&(c, b)| (c > b) as u8).collect();
    let task = binary_task(&db, &labels);
    let cfg = AffinityConfig {
        hasher_layers: vec![],
        feature_hops: vec![],
        ..AffinityConfig::default()
    };
    let r = affinity_scores(&db, &g, &task, &cfg).unwrap();
    let auc = r.scores["rfr_randomnbfnet_1"].unwrap();
    assert!(auc >= 0.95, "auc {auc}");
}

#[test]
fn random_labels_give_chance_scores() {
    let (db, _) = activity_db(200, 2);
    let g = augment_fk_pairs(&build_graph(&db), &db);
    let mut sums = std::collections::BTreeMap::<String, (f64, usize)>::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let labels: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
        let task = binary_task(&db, &labels);
        let cfg = AffinityConfig {
            seed,
            sketch_width: 16,
            hasher_width: 16,
            ..AffinityConfig::default()
        };
        let r = affinity_scores(&db, &g, &task, &cfg).unwrap();
        for (k, v) in r.scores {
            let e = sums.entry(k).or_default();
            e.0 += v.unwrap();
            e.1 += 1;
        }
    }
    assert_eq!(sums.len(), 8);
    for (k, (s, n)) in sums {
        let m = s / n as f64;
        assert!((0.4..=0.6).contains(&m), "{k}: {m}");
    }
}
