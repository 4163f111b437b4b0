use proptest::prelude::*;
use rdbprofile::landscape::*;
use rdbprofile::Family;

fn quad(a: f64, b: f64, c: f64, d: f64, e: f64) -> impl Fn(f64, f64) -> f64 {
    move |s, t| a * s * s + b * t * t + c * s * t + d * s + e * t + 1.0
}

fn lambda_max(a: f64, b: f64, c: f64) -> f64 {
    // Hessian [[2a, c], [c, 2b]]
    (a + b) + ((a - b).powi(2) + c * c).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadratic_p2_is_exact(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -1.0..1.0f64) {
        let g = surface_from_fn(quad(a, b, c, d, 0.0), 0.05, 0.2, Family::Rdl).unwrap();
        prop_assert!((p2(&g).unwrap() - lambda_max(a, b, c)).abs() <= 1e-8);
    }

    #[test]
    fn convex_surfaces_have_no_barrier(a in 0.1..3.0f64, b in 0.1..3.0f64, r in -0.9..0.9f64, d in -1.0..1.0f64, e in -1.0..1.0f64) {
        let c = r * 2.0 * (a * b).sqrt();
        let g = surface_from_fn(quad(a, b, c, d, e), 0.1, 0.5, Family::Rdl).unwrap();
        prop_assert_eq!(pbar(&g, false).unwrap().pbar, 0.0);
    }

    #[test]
    fn metrics_scale_and_axis_swap(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, k in 0.1..10.0f64) {
        let f = move |s: f64, t: f64| quad(a, b, c, 0.3, -0.2)(s, t) + (3.0 * s).sin() * (2.0 * t).cos();
        let g = surface_from_fn(f, 0.1, 0.4, Family::Rdl).unwrap();
        let m = landscape_metrics(&g, false).unwrap();
        let ms = landscape_metrics(&g.scaled(k), false).unwrap();
        let mt = landscape_metrics(&g.transposed(), false).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()));
        prop_assert!(close(ms.p1, k * m.p1) && close(ms.p2, k * m.p2) && close(ms.pbar, k * m.pbar));
        prop_assert!(close(mt.p1, m.p1) && close(mt.p2, m.p2) && close(mt.pbar, m.pbar));
        prop_assert!(m.p1 >= 0.0 && m.pbar >= 0.0);
    }

    #[test]
    fn post_select_ignores_common_scaling(
        ms in proptest::collection::vec((0.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64, 0.0..1.0f64), 1..=3),
        k in 0.01..100.0f64,
    ) {
        let cands: Vec<Candidate> = ms.iter().enumerate().map(|(i, &(p1, p2, pbar, val))| Candidate {
            id: format!("c{i}"),
            val_score: val,
            higher_is_better: true,
            family: Family::Dfs,
            metrics: LandscapeMetrics { p1, p2, pbar, rays_used: 0, rays_interpolated: 0, pbar_approximate: false },
        }).collect();
        let scaled: Vec<Candidate> = cands.iter().cloned().map(|mut c| {
            c.metrics.p1 *= k;
            c.metrics.p2 *= k;
            c.metrics.pbar *= k;
            c
        }).collect();
        prop_assert_eq!(post_select(&cands).unwrap().chosen, post_select(&scaled).unwrap().chosen);
    }
}

#[test]
fn quartic_p2_error_is_second_order() {
    let exact = 3.0 + 2f64.sqrt();
    let err = |h: f64| (p2(&demo_surface(DemoKind::Quartic, h, 4.0 * h).unwrap()).unwrap() - exact).abs();
    for h in [0.2, 0.1, 0.05] {
        let ratio = err(h) / err(h / 2.0);
        assert!(ratio >= 3.5, "h={h} ratio {ratio}");
    }
}

#[test]
fn interpolated_barrier_is_flagged() {
    let mut g = demo_surface(DemoKind::Bump, 0.1, 1.0).unwrap();
    g.rays.retain(|r| r.i % 2 == 0);
    let m = landscape_metrics(&g, true).unwrap();
    assert!(m.pbar_approximate && m.rays_interpolated > 0);
    assert!(m.pbar > 0.5);
    assert!(landscape_metrics(&g, false).is_err());
}

#[test]
fn surface_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface.json");
    let g = demo_surface(DemoKind::Quadratic { a: 1.0, b: 3.0 }, 0.1, 0.3).unwrap();
    std::fs::write(&path, serde_json::to_string(&g).unwrap()).unwrap();
    let back = LossSurfaceGrid::load(&path).unwrap();
    assert_eq!(back, g);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["rho", "s", "t", "L", "base_loss", "family", "rays"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert!(json["rays"][0].get("Ls").is_some());
}
