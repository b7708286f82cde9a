//! Random blocker traffic and Monte Carlo estimates of the cell metrics.
//!
//! The blocker count is `M = 1 + Poisson(lambda_B)` and each blocker's left
//! edge is uniform on `[-R, R - L]`, so every screen lies fully inside the
//! cell.
//!
//! # Random streams
//!
//! Draw `i` of a run seeded with `seed` uses its own ChaCha20 stream:
//! `rand_chacha::ChaCha20Rng::seed_from_u64(seed)` followed by
//! `set_stream(i)`. Uniforms are `(next_u64() >> 11) * 2^-53`. The count is
//! sampled by inverting the Poisson CDF with one uniform, then one uniform
//! per blocker position. Draws are therefore independent of evaluation
//! order and thread count, and can be reproduced by any ChaCha20
//! implementation.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{config_err, Result};
use crate::scene::{is_link_blocked, Blocker, RisConfig, SceneLayout};
use crate::serving::{realization_metrics, realization_points, LinkRasters, MetricsReport, UserGrid};

/// Identity of the random stream layout, recorded in every output file.
pub const RNG_IDENTITY: &str = "chacha20/seed_from_u64+stream=draw_index/v1";

/// Per-draw uniform source.
#[derive(Debug, Clone)]
pub struct DrawRng(ChaCha20Rng);

impl DrawRng {
    pub fn new(seed: u64, draw: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(draw);
        Self(rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Poisson variate by sequential CDF inversion.
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        let u = self.uniform();
        let mut p = 0u64;
        let mut pmf = (-lambda).exp();
        let mut cdf = pmf;
        while u >= cdf && pmf > 0.0 {
            p += 1;
            pmf *= lambda / p as f64;
            cdf += pmf;
        }
        p
    }
}

/// One sampled set of blocker screens, all on the layout's lane.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockerRealization {
    pub blockers: Vec<Blocker>,
}

impl BlockerRealization {
    /// Screens with left edges at `positions`; every screen must fit on the
    /// lane segment `[-R, R]` and at least one is required.
    pub fn from_positions(layout: &SceneLayout, positions: &[f64]) -> Result<Self> {
        if positions.is_empty() {
            return config_err("a realization holds at least one blocker");
        }
        let (lo, hi) = blocker_support(layout)?;
        for &x in positions {
            if !(x >= lo && x <= hi) {
                return config_err(format!("blocker at x = {x} outside the lane support [{lo}, {hi}]"));
            }
        }
        Ok(Self { blockers: positions.iter().map(|&x| Blocker::on_lane(layout, x)).collect() })
    }

    pub fn count(&self) -> usize {
        self.blockers.len()
    }
}

/// Left-edge support `[-R, R - L]` of a blocker.
pub fn blocker_support(layout: &SceneLayout) -> Result<(f64, f64)> {
    let lo = -layout.road_halfwidth;
    let hi = layout.road_halfwidth - layout.blocker_length;
    if hi <= lo {
        return config_err(format!(
            "lane of length {} cannot hold a blocker of length {}",
            2.0 * layout.road_halfwidth,
            layout.blocker_length
        ));
    }
    Ok((lo, hi))
}

/// `M = 1 + Poisson(lambda_b)` screens at i.i.d. uniform positions.
pub fn sample_blockers(lambda_b: f64, layout: &SceneLayout, rng: &mut DrawRng) -> Result<BlockerRealization> {
    if !(lambda_b >= 0.0 && lambda_b.is_finite()) {
        return config_err(format!("blocker density must be finite and >= 0, got {lambda_b}"));
    }
    let (lo, hi) = blocker_support(layout)?;
    let m = 1 + rng.poisson(lambda_b) as usize;
    let blockers = (0..m).map(|_| Blocker::on_lane(layout, lo + rng.uniform() * (hi - lo))).collect();
    Ok(BlockerRealization { blockers })
}

/// Shifted-Poisson pmf `P{M = m} = lambda^(m-1) e^-lambda / (m-1)!`.
pub fn blocker_count_pmf(lambda_b: f64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let p = m - 1;
    if lambda_b == 0.0 {
        return if p == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=p).map(|k| (k as f64).ln()).sum();
    (p as f64 * lambda_b.ln() - lambda_b - ln_fact).exp()
}

/// Monte Carlo mean with a normal 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub half_width_ci95: f64,
    pub n_draws: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = pairwise_sum(samples) / n as f64;
        let half_width_ci95 = if n > 1 {
            let dev: Vec<f64> = samples.iter().map(|&s| (s - mean) * (s - mean)).collect();
            let var = pairwise_sum(&dev) / (n - 1) as f64;
            1.96 * var.sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, half_width_ci95, n_draws: n, seed }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width_ci95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width_ci95
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower() && value <= self.upper()
    }
}

/// Pairwise (cascade) summation in a fixed tree order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// A fixed set of blocker draws shared by every candidate of a comparison.
///
/// The direct-link shadow of each draw does not depend on the RIS, so it is
/// rasterized once here.
#[derive(Debug, Clone)]
pub struct DrawSet {
    pub seed: u64,
    pub lambda_b: f64,
    pub grid: UserGrid,
    pub realizations: Vec<BlockerRealization>,
    bs_shadow: Vec<Vec<bool>>,
}

impl DrawSet {
    pub fn sample(layout: &SceneLayout, lambda_b: f64, n_draws: usize, seed: u64) -> Result<Self> {
        if n_draws == 0 {
            return config_err("at least one Monte Carlo draw is required");
        }
        layout.validate()?;
        let realizations = (0..n_draws as u64)
            .into_par_iter()
            .map(|i| sample_blockers(lambda_b, layout, &mut DrawRng::new(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_realizations(layout, lambda_b, seed, realizations))
    }

    /// Draw set over explicit realizations (no sampling).
    pub fn from_realizations(
        layout: &SceneLayout,
        lambda_b: f64,
        seed: u64,
        realizations: Vec<BlockerRealization>,
    ) -> Self {
        let grid = UserGrid::new(layout);
        let points = grid.points();
        let bs = layout.bs();
        let bs_shadow = realizations
            .par_iter()
            .map(|r| points.iter().map(|&u| is_link_blocked(bs, u, &r.blockers)).collect())
            .collect();
        Self { seed, lambda_b, grid, realizations, bs_shadow }
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    /// Metrics of every draw, in draw order.
    pub fn per_draw_metrics(&self, rasters: &LinkRasters) -> Vec<MetricsReport> {
        debug_assert_eq!(rasters.grid, self.grid);
        self.realizations
            .par_iter()
            .zip(&self.bs_shadow)
            .map(|(r, shadow)| realization_metrics(rasters, &r.blockers, shadow))
            .collect()
    }

    /// Per-user rates of every draw, concatenated in draw order.
    pub fn pooled_rates(&self, rasters: &LinkRasters) -> Vec<f64> {
        let per_draw: Vec<Vec<f64>> = self
            .realizations
            .par_iter()
            .zip(&self.bs_shadow)
            .map(|(r, shadow)| realization_points(rasters, &r.blockers, shadow).map(|(_, rate)| rate).collect())
            .collect();
        per_draw.concat()
    }

    /// Coverage and rate estimates of one deployment over these draws.
    pub fn estimate(&self, rasters: &LinkRasters) -> MetricsEstimate {
        let per_draw = self.per_draw_metrics(rasters);
        let cov: Vec<f64> = per_draw.iter().map(|m| m.coverage_ratio).collect();
        let rate: Vec<f64> = per_draw.iter().map(|m| m.area_avg_rate).collect();
        MetricsEstimate {
            coverage: McEstimate::from_samples(&cov, self.seed),
            rate: McEstimate::from_samples(&rate, self.seed),
        }
    }

    /// Digest of the realizations, for checking that two evaluations saw the
    /// same blockers.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the blocker edge bit patterns.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for r in &self.realizations {
            for b in r.blockers.iter().map(|b| b.x.to_bits()).chain([u64::MAX]) {
                for byte in b.to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsEstimate {
    pub coverage: McEstimate,
    pub rate: McEstimate,
}

/// Expected coverage ratio and area-averaged rate of a deployment
/// (`ris = None` for the no-RIS baseline).
pub fn expected_metrics(
    layout: &SceneLayout,
    ris: Option<&RisConfig>,
    lambda_b: f64,
    n_draws: usize,
    seed: u64,
) -> Result<MetricsEstimate> {
    let rasters = LinkRasters::compute(layout, ris)?;
    let draws = DrawSet::sample(layout, lambda_b, n_draws, seed)?;
    Ok(draws.estimate(&rasters))
}
