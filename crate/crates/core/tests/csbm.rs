use proptest::prelude::*;
use rdbprofile::csbm::*;

fn spec(n: usize, delta: f64, gammas: &[f64], degrees: &[f64], seed: u64) -> CsbmSpec {
    CsbmSpec::from_gammas(n, 0.5, delta, gammas, degrees, seed)
}

#[test]
fn same_label_edge_rate_matches_p() {
    let (p, q) = (0.02, 0.005);
    let (mut edges, mut pairs) = (0.0, 0.0);
    for seed in 0..50 {
        let s = CsbmSpec { n: 500, pi: 0.5, delta: 1.0, metapaths: vec![MetapathSpec::Probabilities { p, q }], seed };
        let inst = sample(&s).unwrap();
        assert!(inst.is_symmetric());
        let npos = inst.labels.iter().filter(|&&y| y > 0).count() as f64;
        let nneg = 500.0 - npos;
        pairs += npos * (npos - 1.0) / 2.0 + nneg * (nneg - 1.0) / 2.0;
        for (v, nb) in inst.adjacency[0].iter().enumerate() {
            edges += nb.iter().filter(|&&u| u as usize > v && inst.labels[u as usize] == inst.labels[v]).count() as f64;
        }
    }
    let rate = edges / pairs;
    let sd = (p * (1.0 - p) / pairs).sqrt();
    assert!((rate - p).abs() <= 3.0 * sd, "rate {rate} vs {p} (sd {sd})");
}

#[test]
fn appended_metapath_leaves_earlier_draws_alone() {
    let a = sample(&spec(300, 2.0, &[1.0], &[5.0], 4)).unwrap();
    let b = sample(&spec(300, 2.0, &[1.0, 0.0], &[5.0, 5.0], 4)).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.scores, b.scores);
    assert_eq!(a.adjacency[0], b.adjacency[0]);
}

#[test]
fn zero_gates_reduce_to_feature_scores() {
    let inst = sample(&spec(400, 2.0, &[1.5, -1.0], &[6.0, 6.0], 1)).unwrap();
    assert_eq!(map_scores(&inst, &[0.0, 0.0], 0.5).unwrap(), inst.scores);
    assert_eq!(estimate_gamma(&inst, &[]), vec![0.0, 0.0]);
}

#[test]
fn linear_region_matches_linear_scores_exactly() {
    let mut inst = sample(&spec(400, 1.0, &[0.8, 1.5], &[6.0, 6.0], 2)).unwrap();
    let max = inst.scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    inst.scores.iter_mut().for_each(|s| *s *= 0.8 / max);
    assert_eq!(map_scores(&inst, &[0.8, 1.5], 0.3).unwrap(), linear_scores(&inst, 0.3).unwrap());
}

#[test]
fn linear_scores_example_and_permutation() {
    // node 0 has neighbors with scores 0.5 and 1.5
    let inst = CsbmInstance {
        labels: vec![1, 1, -1],
        scores: vec![0.0, 0.5, 1.5],
        adjacency: vec![vec![vec![1, 2], vec![0], vec![0]]],
    };
    assert_eq!(linear_scores(&inst, 0.5).unwrap()[0], 2.0);

    let inst = sample(&spec(200, 2.0, &[1.0], &[5.0], 3)).unwrap();
    let z = linear_scores(&inst, 0.4).unwrap();
    let perm: Vec<usize> = (0..200).map(|v| (v * 7 + 3) % 200).collect();
    let mut pinst = inst.clone();
    for v in 0..200 {
        pinst.labels[perm[v]] = inst.labels[v];
        pinst.scores[perm[v]] = inst.scores[v];
        let mut nb: Vec<u32> = inst.adjacency[0][v].iter().map(|&u| perm[u as usize] as u32).collect();
        nb.sort_unstable();
        pinst.adjacency[0][perm[v]] = nb;
    }
    let pz = linear_scores(&pinst, 0.4).unwrap();
    for v in 0..200 {
        assert!((pz[perm[v]] - z[v]).abs() < 1e-12);
    }
}

#[test]
fn constant_zero_score_is_half_wrong_on_balanced_labels() {
    let inst = sample(&spec(2000, 1.0, &[], &[], 9)).unwrap();
    let e = misclass_rate(&vec![0.0; 2000], &inst.labels).unwrap();
    assert!((e - 0.5).abs() <= 3.0 * (0.25f64 / 2000.0).sqrt(), "{e}");
}

#[test]
fn label_flip_symmetry() {
    let inst = sample(&spec(1000, 2.0, &[1.2, -0.7], &[6.0, 4.0], 5)).unwrap();
    let mut flipped = inst.clone();
    flipped.labels.iter_mut().for_each(|y| *y = -*y);
    flipped.scores.iter_mut().for_each(|s| *s = -*s);
    let g = [1.2, -0.7];
    assert_eq!(
        misclass_rate(&map_scores(&inst, &g, 0.5).unwrap(), &inst.labels).unwrap(),
        misclass_rate(&map_scores(&flipped, &g, 0.5).unwrap(), &flipped.labels).unwrap()
    );
    assert_eq!(
        misclass_rate(&linear_scores(&inst, 0.5).unwrap(), &inst.labels).unwrap(),
        misclass_rate(&linear_scores(&flipped, 0.5).unwrap(), &flipped.labels).unwrap()
    );
}

#[test]
fn alpha_is_tanh_half_gamma_on_log_grid() {
    for k in 0..60 {
        let g = 10f64.powf(-4.0 + k as f64 * 0.1);
        for gamma in [g, -g] {
            // p/q = e^γ with both inside (0, 1)
            let q = 0.2 / (1.0 + gamma.exp());
            let p = q * gamma.exp();
            let ga = gamma_alpha(p, q).unwrap();
            assert!((ga.alpha - (ga.gamma / 2.0).tanh()).abs() < 1e-12);
        }
    }
}

#[test]
fn snr_examples() {
    let mixed = snr(&spec(2000, 2.0, &[1.2, -1.2], &[8.0, 8.0], 0), 20_000, 0).unwrap();
    assert!(mixed.rho_lin.abs() < 1e-20, "{}", mixed.rho_lin);
    assert!(mixed.rho_gate > 0.0);
    assert_eq!(mixed.sigma2, 2.0);
    for m in &mixed.metapaths {
        assert!((m.alpha - (m.gamma / 2.0).tanh()).abs() < 1e-12);
        assert!(m.sigma_tilde2 > 0.0 && m.sigma_tilde2 < 1.2 * 1.2);
    }
    let off = snr(&spec(2000, 2.0, &[0.0, 0.0], &[8.0, 8.0], 0), 1000, 0).unwrap();
    assert_eq!(off.rho_gate, 0.0);
    assert!(snr(&spec(2000, 2.0, &[1.0], &[8.0], 0), 999, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn phi_max_identities(s in -20.0..20.0f64, g in 0.0..10.0f64) {
        prop_assert_eq!(phi_max(s, 0.0), 0.0);
        prop_assert_eq!(phi_max(s, -g), -phi_max(s, g));
        if s.abs() <= g {
            prop_assert_eq!(phi_max(s, g), s);
        }
        prop_assert!(phi_max(s, g).abs() <= g);
    }

    #[test]
    fn rho_lin_relabel_invariance_and_flip(
        terms in proptest::collection::vec((0.5..20.0f64, -3.0..3.0f64), 1..5),
        delta in 0.1..3.0f64,
        flip in 0usize..5,
    ) {
        let mk = |ts: &[(f64, f64)]| -> CsbmSpec {
            let g: Vec<f64> = ts.iter().map(|t| t.1).collect();
            let d: Vec<f64> = ts.iter().map(|t| t.0).collect();
            spec(5000, delta, &g, &d, 0)
        };
        let a = snr(&mk(&terms), 1000, 1).unwrap();
        let mut rev = terms.clone();
        rev.reverse();
        let b = snr(&mk(&rev), 1000, 1).unwrap();
        prop_assert!((a.rho_lin - b.rho_lin).abs() <= 1e-9 * a.rho_lin.max(1.0));
        let mut flipped = terms.clone();
        let k = flip % terms.len();
        flipped[k].1 = -flipped[k].1;
        let c = snr(&mk(&flipped), 1000, 1).unwrap();
        let abs_num = |r: &SnrReport| r.metapaths.iter().map(|m| m.degree * (m.alpha * m.gamma).abs()).sum::<f64>();
        prop_assert!(abs_num(&c) <= abs_num(&a) * (1.0 + 1e-12));
    }
}

#[test]
fn gate_estimates_are_consistent() {
    let all: Vec<usize> = (0..2000).collect();
    for seed in 0..20 {
        let s = spec(2000, 2.0, &[1.2, -0.8], &[8.0, 8.0], seed);
        let inst = sample(&s).unwrap();
        let g = estimate_gamma(&inst, &all);
        assert!((g[0] - 1.2).abs() < 0.1 && (g[1] + 0.8).abs() < 0.1, "seed {seed}: {g:?}");
    }
}

#[test]
fn heterophilous_gate_is_usually_negative() {
    let labeled: Vec<usize> = (0..300).collect();
    let neg = (0..20)
        .filter(|&seed| {
            let inst = sample(&spec(2000, 2.0, &[-1.0], &[8.0], seed)).unwrap();
            estimate_gamma(&inst, &labeled)[0] < 0.0
        })
        .count();
    assert!(neg >= 18, "{neg}/20");
}

#[test]
fn full_labeling_saturates_gate_estimation() {
    let opts = CrossoverOptions { grid: vec![0, 1000], seeds: 10, train_pool: 1000, test_pool: 1000 };
    let r = crossover_experiment(&crossover_spec(), &opts).unwrap();
    assert!(r.gated_mean[1] <= r.true_gated_mean + 0.01, "{r:?}");
    // N = 0 is the gate-off model
    assert!(r.curves.iter().all(|c| c.gamma_hat[0].iter().all(|&g| g == 0.0)));
    assert!(r.to_csv().starts_with("n,gated_mean,linear_mean\n0,"));
}

#[test]
fn experiment_preconditions() {
    let setup = GatingSetup::default();
    assert!(matches!(gating_experiment(&setup, 5), Err(CsbmError::TooFewSeeds(5))));
    let bad = CrossoverOptions { grid: vec![30, 10], ..Default::default() };
    assert!(matches!(crossover_experiment(&crossover_spec(), &bad), Err(CsbmError::InvalidGrid(_))));
    let big = CrossoverOptions { grid: vec![10, 2000], ..Default::default() };
    assert!(crossover_experiment(&crossover_spec(), &big).is_err());
    assert_eq!(setup.zero_info.metapaths.len(), 3);
    assert_eq!(setup.strong.gammas().unwrap().iter().map(|g| (g * 1e9).round() / 1e9).collect::<Vec<_>>(), vec![2.0, 2.0]);
}
