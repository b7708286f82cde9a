use risdeploy_core::stochastic::{blocker_count_pmf, blocker_support, sample_blockers};
use risdeploy_core::{
    optimize_height_tilt, rate_cdf, DrawRng, DrawSet, LinkRasters, RisConfig, SceneLayout, SearchSpec,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    ChiSquared::new((observed.len() - 1) as f64).unwrap().sf(stat)
}

#[test]
fn blocker_count_is_shifted_poisson() {
    let layout = SceneLayout::default();
    let n = 20_000u64;
    for (lambda, seed) in [(0.5, 101), (1.0, 102), (2.0, 103)] {
        let mut counts = vec![0.0; 64];
        for i in 0..n {
            let m = sample_blockers(lambda, &layout, &mut DrawRng::new(seed, i)).unwrap().count();
            counts[m] += 1.0;
        }
        // Bins m = 1, 2, ... while the expected count stays >= 5, then a tail.
        let mut observed = Vec::new();
        let mut expected = Vec::new();
        let mut m = 1;
        while n as f64 * blocker_count_pmf(lambda, m as u64 + 1) >= 5.0 {
            observed.push(counts[m]);
            expected.push(n as f64 * blocker_count_pmf(lambda, m as u64));
            m += 1;
        }
        observed.push(counts[m..].iter().sum());
        expected.push(n as f64 - expected.iter().sum::<f64>());
        assert_eq!(counts[0], 0.0);
        let p = chi_square_p(&observed, &expected);
        assert!(p > 0.01, "lambda = {lambda}: p = {p}");
    }
}

#[test]
fn blocker_positions_are_uniform_on_the_support() {
    let layout = SceneLayout::default();
    let (lo, hi) = blocker_support(&layout).unwrap();
    let bins = 20;
    let mut observed = vec![0.0; bins];
    let mut total = 0.0;
    for i in 0..5_000 {
        for b in sample_blockers(1.0, &layout, &mut DrawRng::new(9, i)).unwrap().blockers {
            let k = ((b.x - lo) / (hi - lo) * bins as f64) as usize;
            observed[k.min(bins - 1)] += 1.0;
            total += 1.0;
        }
    }
    let expected = vec![total / bins as f64; bins];
    let p = chi_square_p(&observed, &expected);
    assert!(p > 0.01, "p = {p}");
}

/// Exact expected coverage without a RIS and a single blocker: a user is
/// unserved iff the screen spans the point where its direct ray crosses the
/// lane below the screen top.
fn single_blocker_truth(layout: &SceneLayout, draws: &DrawSet) -> f64 {
    let (lo, hi) = blocker_support(layout).unwrap();
    let l = layout.blocker_length;
    let grid = &draws.grid;
    let mut shadow = 0.0;
    for k in 0..grid.len() {
        let u = grid.point(k);
        if u.y <= layout.lane_y {
            continue;
        }
        let t = layout.lane_y / u.y;
        let cx = t * u.x;
        let cz = layout.h_bs * (1.0 - t);
        if cz <= layout.blocker_height {
            let overlap = (cx.min(hi) - (cx - l).max(lo)).max(0.0);
            shadow += overlap / (hi - lo);
        }
    }
    1.0 - shadow / grid.len() as f64
}

#[test]
fn confidence_intervals_are_calibrated() {
    let layout = SceneLayout::default();
    let rasters = LinkRasters::without_ris(&layout).unwrap();
    let mut covered = 0;
    let mut truth = f64::NAN;
    for e in 0..100 {
        let draws = DrawSet::sample(&layout, 0.0, 100, 1000 + e).unwrap();
        if e == 0 {
            truth = single_blocker_truth(&layout, &draws);
        }
        covered += draws.estimate(&rasters).coverage.contains(truth) as usize;
    }
    assert!(covered >= 90, "{covered}/100 intervals cover {truth}");
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let layout = SceneLayout { grid_resolution: 1.0, ..SceneLayout::default() };
    let ris = RisConfig::standard(&layout, 3.0, 9.0, 0.5);
    let spec = SearchSpec {
        h_values: vec![8.0, 12.0],
        tilt_resolution: 20f64.to_radians(),
        n_draws: 40,
        seed: 77,
        ..SearchSpec::default()
    };
    let run = || {
        let rasters = LinkRasters::compute(&layout, Some(&ris)).unwrap();
        let draws = DrawSet::sample(&layout, 1.0, 60, 5).unwrap();
        let est = draws.estimate(&rasters);
        let cdf = rate_cdf(&layout, Some(&ris), 1.0, 20, 6).unwrap();
        let search = optimize_height_tilt(&spec, &layout, &ris, 0.0).unwrap();
        let bits: Vec<u64> = [est.coverage.mean, est.coverage.half_width_ci95, est.rate.mean, est.rate.half_width_ci95]
            .into_iter()
            .chain(cdf.samples().iter().copied())
            .chain(search.trace.iter().map(|c| c.value.mean))
            .map(f64::to_bits)
            .collect();
        let pl: Vec<u64> = (0..rasters.grid.len()).map(|k| rasters.pl_ris_at(k).linear().to_bits()).collect();
        (bits, pl, search.best.config)
    };
    let reference = with_threads(1, run);
    for n in [2, 3, 8] {
        assert_eq!(with_threads(n, run), reference, "{n} threads");
    }
}
