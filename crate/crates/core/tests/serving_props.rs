use proptest::prelude::*;
use risdeploy_core::serving::split_rate;
use risdeploy_core::{
    build_lattice, classify, evaluate_field, is_link_blocked, metrics, optimal_beta, rate_both, rate_single, Blocker,
    DrawRng, LinkRasters, PathLoss, RisConfig, SceneLayout, ServingStatus, Vec3,
};

fn coarse() -> SceneLayout {
    SceneLayout { grid_resolution: 2.0, ..SceneLayout::default() }
}

/// Brute-force maximizer of the split rate on a uniform grid of `step`.
fn scan(g_ris: f64, g_bs: f64, step: f64) -> (f64, f64) {
    let n = (1.0 / step).round() as usize;
    (0..=n)
        .map(|k| k as f64 / n as f64)
        .map(|b| (b, split_rate(g_ris, g_bs, b)))
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

#[test]
fn water_filling_examples_match_a_fine_scan() {
    for (g_ris, g_bs) in [(1.0, 1.0), (10.0, 2.0), (0.5, 40.0), (1e3, 1e3), (3.0, 0.2), (0.05, 0.07)] {
        let beta = optimal_beta(g_ris, g_bs).unwrap();
        let (b_scan, r_scan) = scan(g_ris, g_bs, 1e-6);
        assert!((beta - b_scan).abs() <= 2e-6, "({g_ris}, {g_bs}): {beta} vs {b_scan}");
        assert!(split_rate(g_ris, g_bs, beta) >= r_scan - 1e-12);
    }
}

#[test]
fn water_filling_is_never_beaten_by_a_scan() {
    for i in 0..1000 {
        let mut rng = DrawRng::new(5, i);
        let g_ris = 10f64.powf(-3.0 + 7.0 * rng.uniform());
        let g_bs = 10f64.powf(-3.0 + 7.0 * rng.uniform());
        let beta = optimal_beta(g_ris, g_bs).unwrap();
        let closed = split_rate(g_ris, g_bs, beta);
        let (_, r_scan) = scan(g_ris, g_bs, 1e-3);
        assert!(r_scan <= closed + 1e-9, "case {i}: scan {r_scan} beats {closed}");
    }
}

proptest! {
    #[test]
    fn two_links_beat_either_alone(a in 1e2..1e12f64, b in 1e2..1e12f64) {
        let (pa, pb) = (PathLoss::from_linear(a), PathLoss::from_linear(b));
        let both = rate_both(pa, pb, 1e9);
        prop_assert!(both >= rate_single(pa, 1e9) - 1e-12);
        prop_assert!(both >= rate_single(pb, 1e9) - 1e-12);
        prop_assert!(both <= rate_single(pa, 1e9) + rate_single(pb, 1e9) + 1e-12);
    }
}

struct Scene {
    layout: SceneLayout,
    ris: RisConfig,
    blockers: Vec<Blocker>,
}

fn random_scene(i: u64) -> Scene {
    let mut rng = DrawRng::new(17, i);
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.uniform();
    let layout = coarse();
    let x = u(-30.0, 30.0);
    let h = u(3.0, 20.0);
    let tilt = u(0.0, 0.99) * layout.max_tilt(x, h);
    let ris = RisConfig::standard(&layout, x, h, tilt);
    let m = 1 + u(0.0, 5.0) as usize;
    let blockers = (0..m).map(|_| Blocker::on_lane(&layout, u(-50.0, 45.2))).collect();
    Scene { layout, ris, blockers }
}

#[test]
fn regions_partition_the_grid() {
    for i in 0..100 {
        let s = random_scene(i);
        let rasters = LinkRasters::compute(&s.layout, Some(&s.ris)).unwrap();
        let field = evaluate_field(&rasters, &s.blockers);
        let m = metrics(&field);
        let n = field.grid.len();
        assert_eq!(m.region_counts.iter().sum::<usize>(), n);
        assert_eq!(m.n_points, n);
        assert_eq!(m.coverage_ratio, 1.0 - m.count(ServingStatus::Unserved) as f64 / n as f64);
        let recombined: f64 =
            ServingStatus::ALL.iter().map(|&st| m.count(st) as f64 * m.region_mean(st).unwrap_or(0.0)).sum::<f64>()
                / n as f64;
        assert!((recombined - m.area_avg_rate).abs() <= 1e-12 * m.area_avg_rate.max(1.0), "scene {i}");

        let center = s.ris.center(&s.layout);
        let bs = s.layout.bs();
        for k in 0..n {
            let user = field.grid.point(k);
            let bs_ok = !is_link_blocked(bs, user, &s.blockers) && field.pl_bs[k].within(s.layout.pl_threshold);
            let ris_ok = !is_link_blocked(center, user, &s.blockers) && field.pl_ris[k].within(s.layout.pl_threshold);
            let want = match (bs_ok, ris_ok) {
                (true, true) => ServingStatus::Both,
                (true, false) => ServingStatus::BsOnly,
                (false, true) => ServingStatus::RisOnly,
                (false, false) => ServingStatus::Unserved,
            };
            assert_eq!(field.status[k], want, "scene {i} point {k}");
            assert_eq!(field.rate[k] == 0.0, want == ServingStatus::Unserved, "scene {i} point {k}");
        }
    }
}

#[test]
fn classify_agrees_with_the_raster_pipeline() {
    for i in 0..10 {
        let s = random_scene(100 + i);
        let lattice = build_lattice(&s.ris, &s.layout).unwrap();
        let rasters = LinkRasters::compute(&s.layout, Some(&s.ris)).unwrap();
        let field = evaluate_field(&rasters, &s.blockers);
        for k in (0..field.grid.len()).step_by(37) {
            let p = field.grid.point(k);
            let st = classify((p.x, p.y), &s.layout, &s.ris, &lattice, &s.blockers).unwrap();
            assert_eq!(st, field.status[k], "scene {i} point {k}");
        }
    }
}

#[test]
fn removing_a_blocker_never_hurts() {
    for i in 0..30 {
        let s = random_scene(200 + i);
        let rasters = LinkRasters::compute(&s.layout, Some(&s.ris)).unwrap();
        let full = evaluate_field(&rasters, &s.blockers);
        for drop in 0..s.blockers.len() {
            let mut fewer = s.blockers.clone();
            fewer.remove(drop);
            let f = evaluate_field(&rasters, &fewer);
            for k in 0..f.grid.len() {
                assert!(f.rate[k] >= full.rate[k], "scene {i} point {k}");
            }
            let (a, b) = (metrics(&full), metrics(&f));
            assert!(b.coverage_ratio >= a.coverage_ratio);
            assert!(b.area_avg_rate >= a.area_avg_rate - 1e-12);
        }
    }
}

#[test]
fn centered_panel_gives_mirrored_status_maps() {
    let layout = coarse();
    let ris = RisConfig::standard(&layout, 0.0, 8.0, 0.4);
    let rasters = LinkRasters::compute(&layout, Some(&ris)).unwrap();
    for i in 0..20 {
        let s = random_scene(300 + i);
        let mirrored: Vec<Blocker> = s.blockers.iter().map(|b| Blocker { x: -b.x - b.length, ..*b }).collect();
        let a = evaluate_field(&rasters, &s.blockers);
        let b = evaluate_field(&rasters, &mirrored);
        let nx = a.grid.nx();
        for k in 0..a.grid.len() {
            let (ix, iy) = (k % nx, k / nx);
            let km = iy * nx + (nx - 1 - ix);
            assert_eq!(a.status[k], b.status[km], "draw {i} point {k}");
            assert!((a.rate[k] - b.rate[km]).abs() <= 1e-12 * a.rate[k].max(1.0));
        }
    }
}

#[test]
fn rasters_agree_with_pointwise_links() {
    let layout = coarse();
    let ris = RisConfig::standard(&layout, 0.0, 12.0, 0.7);
    let rasters = LinkRasters::compute(&layout, Some(&ris)).unwrap();
    let lattice = build_lattice(&ris, &layout).unwrap();
    for k in (0..rasters.grid.len()).step_by(11) {
        let u: Vec3 = rasters.grid.point(k);
        let want = risdeploy_core::pl_ris(layout.bs(), u, &lattice, &layout, 8.0, 3.0).unwrap().linear();
        let got = rasters.pl_ris_at(k).linear();
        assert!((want - got).abs() <= 1e-12 * want, "point {k}");
    }
}
