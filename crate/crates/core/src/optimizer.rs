//! Exhaustive deployment searches over RIS position, height and tilt.
//!
//! Every candidate of one search is scored on the same [`DrawSet`], so
//! comparisons between candidates see identical blocker realizations.

use crate::error::{config_err, Result};
use crate::scene::{RisConfig, SceneLayout};
use crate::serving::LinkRasters;
use crate::stochastic::{DrawSet, McEstimate, MetricsEstimate};

/// Objective of a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    CoverageRatio,
    AreaAvgRate,
}

impl Metric {
    pub fn pick(self, estimate: &MetricsEstimate) -> McEstimate {
        match self {
            Metric::CoverageRatio => estimate.coverage,
            Metric::AreaAvgRate => estimate.rate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::CoverageRatio => "coverage_ratio",
            Metric::AreaAvgRate => "area_avg_rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub metric: Metric,
    pub x_values: Vec<f64>,
    pub h_values: Vec<f64>,
    /// Tilt grid step, radians.
    pub tilt_resolution: f64,
    pub n_draws: usize,
    pub seed: u64,
    /// Blocker density on the lane (`lambda_B`).
    pub lambda_b: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            metric: Metric::AreaAvgRate,
            x_values: (-4..=4).map(|k| 10.0 * k as f64).collect(),
            h_values: (3..=10).map(|k| 2.0 * k as f64).collect(),
            tilt_resolution: 1f64.to_radians(),
            n_draws: 500,
            seed: 1,
            lambda_b: 1.0,
        }
    }
}

impl SearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.x_values.is_empty() || self.h_values.is_empty() {
            return config_err("search needs at least one x and one height candidate");
        }
        if self.x_values.iter().chain(&self.h_values).any(|v| !v.is_finite()) {
            return config_err("search candidates must be finite");
        }
        if !(self.tilt_resolution > 0.0 && self.tilt_resolution.is_finite()) {
            return config_err("tilt resolution must be finite and > 0");
        }
        if self.n_draws == 0 {
            return config_err("at least one Monte Carlo draw is required");
        }
        if !(self.lambda_b >= 0.0 && self.lambda_b.is_finite()) {
            return config_err("blocker density must be finite and >= 0");
        }
        Ok(())
    }
}

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub config: RisConfig,
    /// Estimate of the search metric.
    pub value: McEstimate,
    /// Both metrics, over the same draws.
    pub estimate: MetricsEstimate,
}

impl Candidate {
    /// Strict preference: larger mean, then smaller height, smaller tilt,
    /// smaller `|x|`.
    fn beats(&self, other: &Candidate) -> bool {
        let key = |c: &Candidate| (c.config.height, c.config.tilt, c.config.x.abs());
        if self.value.mean != other.value.mean {
            return self.value.mean > other.value.mean;
        }
        key(self) < key(other)
    }
}

fn best_of<'a>(candidates: impl IntoIterator<Item = &'a Candidate>) -> Option<&'a Candidate> {
    candidates.into_iter().fold(None, |best: Option<&Candidate>, c| match best {
        Some(b) if !c.beats(b) => Some(b),
        _ => Some(c),
    })
}

/// Best tilt found at one height.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightOptimum {
    pub height: f64,
    pub best: Candidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Candidate,
    /// Every evaluated candidate, in grid order.
    pub trace: Vec<Candidate>,
    /// Per-height optima, in `h_values` order (skipped heights omitted).
    pub per_height: Vec<HeightOptimum>,
    /// Heights with no feasible tilt on the grid.
    pub skipped_heights: Vec<f64>,
    pub draws_fingerprint: u64,
}

impl SearchResult {
    pub fn best_config(&self) -> &RisConfig {
        &self.best.config
    }

    pub fn best_value(&self) -> McEstimate {
        self.best.value
    }
}

/// Candidate tilts `k * resolution`, `k >= 1`, strictly below the feasibility
/// bound of a panel at `(x, height)`.
pub fn tilt_grid(layout: &SceneLayout, x: f64, height: f64, resolution: f64) -> Vec<f64> {
    let bound = layout.max_tilt(x, height);
    (1..).map(|k| k as f64 * resolution).take_while(|&t| t < bound - 1e-12).collect()
}

/// Scores one configuration on `draws`.
pub fn evaluate(layout: &SceneLayout, config: &RisConfig, draws: &DrawSet, metric: Metric) -> Result<Candidate> {
    let rasters = LinkRasters::compute(layout, Some(config))?;
    let estimate = draws.estimate(&rasters);
    Ok(Candidate { config: config.clone(), value: metric.pick(&estimate), estimate })
}

fn search_heights(
    spec: &SearchSpec,
    layout: &SceneLayout,
    template: &RisConfig,
    x: f64,
    heights: &[f64],
    draws: &DrawSet,
) -> Result<SearchResult> {
    let mut trace = Vec::new();
    let mut per_height = Vec::new();
    let mut skipped_heights = Vec::new();
    for &h in heights {
        let tilts = if h > layout.blocker_height { tilt_grid(layout, x, h, spec.tilt_resolution) } else { Vec::new() };
        if tilts.is_empty() {
            skipped_heights.push(h);
            continue;
        }
        let start = trace.len();
        for tilt in tilts {
            let config = RisConfig { x, height: h, tilt, ..template.clone() };
            trace.push(evaluate(layout, &config, draws, spec.metric)?);
        }
        let best = best_of(&trace[start..]).expect("nonempty tilt grid").clone();
        per_height.push(HeightOptimum { height: h, best });
    }
    let Some(best) = best_of(&trace).cloned() else {
        return config_err(format!("no feasible (height, tilt) candidate at x = {x}"));
    };
    Ok(SearchResult { best, trace, per_height, skipped_heights, draws_fingerprint: draws.fingerprint() })
}

/// Exhaustive search over `spec.h_values` and the feasible tilt grid at a
/// fixed horizontal position. Panel size and pattern come from `template`.
pub fn optimize_height_tilt(
    spec: &SearchSpec,
    layout: &SceneLayout,
    template: &RisConfig,
    x_fixed: f64,
) -> Result<SearchResult> {
    spec.validate()?;
    let draws = DrawSet::sample(layout, spec.lambda_b, spec.n_draws, spec.seed)?;
    optimize_height_tilt_on(spec, layout, template, x_fixed, &draws)
}

/// [`optimize_height_tilt`] on caller-provided draws.
pub fn optimize_height_tilt_on(
    spec: &SearchSpec,
    layout: &SceneLayout,
    template: &RisConfig,
    x_fixed: f64,
    draws: &DrawSet,
) -> Result<SearchResult> {
    spec.validate()?;
    search_heights(spec, layout, template, x_fixed, &spec.h_values, draws)
}

/// How height and tilt are chosen for each `x` of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HoldMode {
    /// Height and tilt of the template; `x` values where the tilt is
    /// infeasible are skipped.
    Fixed,
    /// Template height, tilt optimized per `x` on the full draw set.
    OptimizeTilt,
    /// Height and tilt optimized per `x` with `inner_draws` draws, then
    /// rescored on the full draw set.
    OptimizeHeightTilt { inner_draws: usize },
}

impl HoldMode {
    pub fn name(self) -> &'static str {
        match self {
            HoldMode::Fixed => "fixed",
            HoldMode::OptimizeTilt => "optimize-tilt",
            HoldMode::OptimizeHeightTilt { .. } => "optimize-height-tilt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    /// `None` when no feasible configuration exists at this `x`.
    pub best: Option<Candidate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mode: HoldMode,
    pub rows: Vec<SweepRow>,
    /// No-RIS estimate on the same draws.
    pub baseline: MetricsEstimate,
    /// Full-draw evaluations and the overall best.
    pub search: SearchResult,
}

/// Expected metric per horizontal position, with a no-RIS baseline.
pub fn sweep_x(spec: &SearchSpec, layout: &SceneLayout, template: &RisConfig, mode: HoldMode) -> Result<SweepResult> {
    spec.validate()?;
    let draws = DrawSet::sample(layout, spec.lambda_b, spec.n_draws, spec.seed)?;
    let baseline = draws.estimate(&LinkRasters::without_ris(layout)?);
    let inner = match mode {
        HoldMode::OptimizeHeightTilt { inner_draws } => {
            Some(DrawSet::sample(layout, spec.lambda_b, inner_draws, spec.seed)?)
        }
        _ => None,
    };

    let mut rows = Vec::with_capacity(spec.x_values.len());
    let mut trace = Vec::new();
    for &x in &spec.x_values {
        let best = match mode {
            HoldMode::Fixed => {
                let config = RisConfig { x, ..template.clone() };
                if config.validate(layout).is_ok() {
                    let c = evaluate(layout, &config, &draws, spec.metric)?;
                    trace.push(c.clone());
                    Some(c)
                } else {
                    None
                }
            }
            HoldMode::OptimizeTilt => match search_heights(spec, layout, template, x, &[template.height], &draws) {
                Ok(r) => {
                    trace.extend(r.trace);
                    Some(r.best)
                }
                Err(_) => None,
            },
            HoldMode::OptimizeHeightTilt { .. } => {
                let inner = inner.as_ref().expect("inner draws sampled");
                match search_heights(spec, layout, template, x, &spec.h_values, inner) {
                    Ok(r) => {
                        let c = evaluate(layout, &r.best.config, &draws, spec.metric)?;
                        trace.push(c.clone());
                        Some(c)
                    }
                    Err(_) => None,
                }
            }
        };
        rows.push(SweepRow { x, best });
    }

    let Some(best) = best_of(&trace).cloned() else {
        return config_err("no feasible RIS configuration at any x");
    };
    let search = SearchResult {
        best,
        trace,
        per_height: Vec::new(),
        skipped_heights: Vec::new(),
        draws_fingerprint: draws.fingerprint(),
    };
    Ok(SweepResult { mode, rows, baseline, search })
}

/// Sorted per-user rates pooled over all grid points and draws.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCdf {
    samples: Vec<f64>,
}

impl RateCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { samples }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Smallest sample `r` with `F(r) >= p` (nearest-rank).
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.samples.len();
        assert!(n > 0, "quantile of an empty distribution");
        let rank = (p.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.samples[rank.clamp(1, n) - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Empirical `F(r)`: fraction of samples `<= r`.
    pub fn fraction_at_or_below(&self, r: f64) -> f64 {
        self.samples.partition_point(|&s| s <= r) as f64 / self.samples.len() as f64
    }

    /// `(rate, F(rate))` at every distinct sample value, ascending.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.samples.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &s) in self.samples.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 = f,
                _ => out.push((s, f)),
            }
        }
        out
    }
}

/// Pooled user-rate distribution of a deployment (`ris = None` for no RIS).
pub fn rate_cdf(
    layout: &SceneLayout,
    ris: Option<&RisConfig>,
    lambda_b: f64,
    n_draws: usize,
    seed: u64,
) -> Result<RateCdf> {
    let rasters = LinkRasters::compute(layout, ris)?;
    let draws = DrawSet::sample(layout, lambda_b, n_draws, seed)?;
    Ok(RateCdf::from_samples(draws.pooled_rates(&rasters)))
}
