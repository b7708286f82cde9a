//! Serving-region classification, per-user rates and cell metrics.
//!
//! A user is served by a link when the link is clear of every blocker and its
//! path loss is within the threshold. The two link indicators give the four
//! serving regions; users served by both links split power between them
//! with the water-filling ratio.

use rayon::prelude::*;

use crate::channel::{pl_bs, pl_ris, PathLoss};
use crate::error::{Error, Result};
use crate::kernel::CascadeKernel;
use crate::scene::{build_lattice, is_link_blocked, Blocker, ElementLattice, RisConfig, SceneLayout, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ServingStatus {
    Unserved,
    BsOnly,
    RisOnly,
    Both,
}

impl ServingStatus {
    pub const ALL: [ServingStatus; 4] =
        [ServingStatus::Unserved, ServingStatus::BsOnly, ServingStatus::RisOnly, ServingStatus::Both];

    pub fn from_links(bs_ok: bool, ris_ok: bool) -> Self {
        match (bs_ok, ris_ok) {
            (true, true) => ServingStatus::Both,
            (true, false) => ServingStatus::BsOnly,
            (false, true) => ServingStatus::RisOnly,
            (false, false) => ServingStatus::Unserved,
        }
    }

    /// Raster code: 0 unserved, 1 BS only, 2 RIS only, 3 both.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            ServingStatus::Unserved => "unserved",
            ServingStatus::BsOnly => "bs_only",
            ServingStatus::RisOnly => "ris_only",
            ServingStatus::Both => "both",
        }
    }
}

/// Cell-centered user grid over `[-R, R] x (0, y_ris)`, stored row by row
/// (index `iy * nx + ix`).
#[derive(Debug, Clone, PartialEq)]
pub struct UserGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl UserGrid {
    pub fn new(layout: &SceneLayout) -> Self {
        let res = layout.grid_resolution;
        let nx = (2.0 * layout.road_halfwidth / res + 1e-9).floor() as usize;
        let ny = (layout.y_ris / res + 1e-9).floor() as usize;
        let xs = (0..nx).map(|i| -layout.road_halfwidth + (i as f64 + 0.5) * res).collect();
        let ys = (0..ny).map(|j| (j as f64 + 0.5) * res).collect();
        Self { xs, ys }
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn ny(&self) -> usize {
        self.ys.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize) -> Vec3 {
        let nx = self.nx();
        Vec3::ground(self.xs[k % nx], self.ys[k / nx])
    }

    pub fn points(&self) -> Vec<Vec3> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Whether `x -> -x` maps the grid onto itself exactly.
    pub fn is_mirror_symmetric(&self) -> bool {
        let n = self.nx();
        (0..n).all(|i| self.xs[i] == -self.xs[n - 1 - i])
    }
}

/// Per-user rates for each way a user can be served.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointRates {
    pub bs_only: f64,
    pub ris_only: f64,
    pub both: f64,
}

impl PointRates {
    pub fn for_status(&self, status: ServingStatus) -> f64 {
        match status {
            ServingStatus::Unserved => 0.0,
            ServingStatus::BsOnly => self.bs_only,
            ServingStatus::RisOnly => self.ris_only,
            ServingStatus::Both => self.both,
        }
    }
}

/// The RIS side of a configuration's rasters.
#[derive(Debug, Clone)]
pub struct RisRaster {
    pub config: RisConfig,
    pub center: Vec3,
    pub pl_ris: Vec<PathLoss>,
}

/// Path-loss and rate rasters of one deployment. Blockers never change path
/// loss, so these are computed once and reused by every blocker realization.
#[derive(Debug, Clone)]
pub struct LinkRasters {
    pub layout: SceneLayout,
    pub grid: UserGrid,
    pub pl_bs: Vec<PathLoss>,
    /// `None` is the no-RIS baseline: the cascade never serves anyone.
    pub ris: Option<RisRaster>,
    pub rates: Vec<PointRates>,
}

impl LinkRasters {
    pub fn compute(layout: &SceneLayout, ris: Option<&RisConfig>) -> Result<Self> {
        layout.validate()?;
        let grid = UserGrid::new(layout);
        let points = grid.points();
        let bs = layout.bs();
        let pl_bs_raster: Vec<PathLoss> = points.iter().map(|&u| pl_bs(bs, u, layout)).collect();

        let ris = match ris {
            None => None,
            Some(cfg) => {
                let lattice = build_lattice(cfg, layout)?;
                let kernel = CascadeKernel::new(bs, &lattice, layout, cfg.element_gain, cfg.pattern_exponent);
                Some(RisRaster {
                    config: cfg.clone(),
                    center: lattice.center,
                    pl_ris: cascade_raster(&kernel, &grid, cfg.x == 0.0),
                })
            }
        };

        let rho = layout.snr;
        let rates = (0..grid.len())
            .map(|k| {
                let pb = pl_bs_raster[k];
                let pr = ris.as_ref().map_or(PathLoss::Infinite, |r| r.pl_ris[k]);
                PointRates {
                    bs_only: rate_single(pb, rho),
                    ris_only: rate_single(pr, rho),
                    both: rate_both(pr, pb, rho),
                }
            })
            .collect();

        Ok(Self { layout: layout.clone(), grid, pl_bs: pl_bs_raster, ris, rates })
    }

    pub fn without_ris(layout: &SceneLayout) -> Result<Self> {
        Self::compute(layout, None)
    }

    pub fn pl_ris_at(&self, k: usize) -> PathLoss {
        self.ris.as_ref().map_or(PathLoss::Infinite, |r| r.pl_ris[k])
    }

    /// Whether the direct link at grid point `k` is clear of `blockers` and
    /// within range.
    pub fn bs_ok(&self, k: usize, blockers: &[Blocker]) -> bool {
        self.pl_bs[k].within(self.layout.pl_threshold)
            && !is_link_blocked(self.layout.bs(), self.grid.point(k), blockers)
    }

    pub fn ris_in_range(&self, k: usize) -> bool {
        self.pl_ris_at(k).within(self.layout.pl_threshold)
    }

    pub fn ris_ok(&self, k: usize, blockers: &[Blocker]) -> bool {
        match &self.ris {
            None => false,
            Some(r) => {
                r.pl_ris[k].within(self.layout.pl_threshold) && !is_link_blocked(r.center, self.grid.point(k), blockers)
            }
        }
    }

    pub fn status(&self, k: usize, blockers: &[Blocker]) -> ServingStatus {
        ServingStatus::from_links(self.bs_ok(k, blockers), self.ris_ok(k, blockers))
    }

    /// Area-averaged rate each link would deliver on its own, ignoring
    /// blockers and the threshold: `(cascade, direct)`.
    pub fn link_rate_averages(&self) -> (f64, f64) {
        let n = self.grid.len() as f64;
        let ris: f64 = self.rates.iter().map(|r| r.ris_only).sum();
        let bs: f64 = self.rates.iter().map(|r| r.bs_only).sum();
        (ris / n, bs / n)
    }
}

/// Cascade path loss over the grid. With the RIS centered at `x = 0` on a
/// mirror-symmetric grid only the `x <= 0` half is evaluated and mirrored.
fn cascade_raster(kernel: &CascadeKernel, grid: &UserGrid, centered: bool) -> Vec<PathLoss> {
    let nx = grid.nx();
    if !(centered && grid.is_mirror_symmetric()) {
        return kernel.raster(&grid.points());
    }
    let half = nx.div_ceil(2);
    let points: Vec<Vec3> =
        grid.ys.iter().flat_map(|&y| grid.xs[..half].iter().map(move |&x| Vec3::ground(x, y))).collect();
    let left = kernel.raster(&points);
    let mut out = Vec::with_capacity(grid.len());
    for row in left.chunks(half) {
        out.extend_from_slice(row);
        out.extend(row[..nx - half].iter().rev());
    }
    out
}

/// Serving status of one ground user, computed from scratch.
pub fn classify(
    point: (f64, f64),
    layout: &SceneLayout,
    ris: &RisConfig,
    lattice: &ElementLattice,
    blockers: &[Blocker],
) -> Result<ServingStatus> {
    let user = Vec3::ground(point.0, point.1);
    let bs = layout.bs();
    let bs_ok = !is_link_blocked(bs, user, blockers) && pl_bs(bs, user, layout).within(layout.pl_threshold);
    let ris_ok = !is_link_blocked(ris.center(layout), user, blockers)
        && pl_ris(bs, user, lattice, layout, ris.element_gain, ris.pattern_exponent)?.within(layout.pl_threshold);
    Ok(ServingStatus::from_links(bs_ok, ris_ok))
}

/// Single-link spectral efficiency `log2(1 + rho / PL)`; zero without a link.
pub fn rate_single(pl: PathLoss, rho: f64) -> f64 {
    match pl {
        PathLoss::Finite(v) => (rho / v).ln_1p() / std::f64::consts::LN_2,
        PathLoss::Infinite => 0.0,
    }
}

/// Water-filling power fraction for the cascade link given the two channel
/// gains `rho / PL`.
pub fn optimal_beta(g_ris: f64, g_bs: f64) -> Result<f64> {
    if g_ris <= 0.0 && g_bs <= 0.0 {
        return Err(Error::UndefinedSplit);
    }
    if g_bs <= 0.0 {
        return Ok(1.0);
    }
    if g_ris <= 0.0 {
        return Ok(0.0);
    }
    Ok((0.5 * (1.0 + 1.0 / g_bs - 1.0 / g_ris)).clamp(0.0, 1.0))
}

/// Sum rate of the two links with power split at [`optimal_beta`].
pub fn rate_both(pl_ris: PathLoss, pl_bs: PathLoss, rho: f64) -> f64 {
    let g_ris = rho / pl_ris.linear();
    let g_bs = rho / pl_bs.linear();
    match optimal_beta(g_ris, g_bs) {
        Ok(beta) => split_rate(g_ris, g_bs, beta),
        Err(_) => 0.0,
    }
}

/// Sum rate `log2(1 + g_ris beta) + log2(1 + g_bs (1 - beta))`.
pub fn split_rate(g_ris: f64, g_bs: f64, beta: f64) -> f64 {
    ((g_ris * beta).ln_1p() + (g_bs * (1.0 - beta)).ln_1p()) / std::f64::consts::LN_2
}

/// Per-point link budgets, status and rate for one blocker realization.
#[derive(Debug, Clone)]
pub struct FieldMap {
    pub grid: UserGrid,
    pub pl_ris: Vec<PathLoss>,
    pub pl_bs: Vec<PathLoss>,
    pub status: Vec<ServingStatus>,
    pub rate: Vec<f64>,
}

pub fn evaluate_field(rasters: &LinkRasters, blockers: &[Blocker]) -> FieldMap {
    let n = rasters.grid.len();
    let status: Vec<ServingStatus> = (0..n).into_par_iter().map(|k| rasters.status(k, blockers)).collect();
    let rate = status.iter().zip(&rasters.rates).map(|(&s, r)| r.for_status(s)).collect();
    FieldMap {
        grid: rasters.grid.clone(),
        pl_ris: (0..n).map(|k| rasters.pl_ris_at(k)).collect(),
        pl_bs: rasters.pl_bs.clone(),
        status,
        rate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub coverage_ratio: f64,
    pub area_avg_rate: f64,
    /// Grid-point counts indexed by [`ServingStatus::code`].
    pub region_counts: [usize; 4],
    /// Mean rate per region; `None` for an empty region.
    pub region_avg: [Option<f64>; 4],
    pub n_points: usize,
}

impl MetricsReport {
    pub fn count(&self, s: ServingStatus) -> usize {
        self.region_counts[s.code() as usize]
    }

    pub fn region_mean(&self, s: ServingStatus) -> Option<f64> {
        self.region_avg[s.code() as usize]
    }

    fn from_status_rates(statuses: impl Iterator<Item = (ServingStatus, f64)>) -> Self {
        let mut counts = [0usize; 4];
        let mut sums = [0.0f64; 4];
        for (s, r) in statuses {
            counts[s.code() as usize] += 1;
            sums[s.code() as usize] += r;
        }
        let n: usize = counts.iter().sum();
        let total: f64 = sums.iter().sum();
        let mut region_avg = [None; 4];
        for i in 0..4 {
            if counts[i] > 0 {
                region_avg[i] = Some(sums[i] / counts[i] as f64);
            }
        }
        let unserved = counts[ServingStatus::Unserved.code() as usize];
        Self {
            coverage_ratio: 1.0 - unserved as f64 / n as f64,
            area_avg_rate: total / n as f64,
            region_counts: counts,
            region_avg,
            n_points: n,
        }
    }
}

pub fn metrics(field: &FieldMap) -> MetricsReport {
    MetricsReport::from_status_rates(field.status.iter().copied().zip(field.rate.iter().copied()))
}

/// Status and rate of every grid point for one realization, without
/// materializing the field map. `bs_shadow[k]` says whether some blocker
/// cuts the direct link at point `k`.
pub(crate) fn realization_points<'a>(
    rasters: &'a LinkRasters,
    blockers: &'a [Blocker],
    bs_shadow: &'a [bool],
) -> impl Iterator<Item = (ServingStatus, f64)> + 'a {
    let threshold = rasters.layout.pl_threshold;
    let center = rasters.ris.as_ref().map(|r| r.center);
    (0..rasters.grid.len()).map(move |k| {
        let bs_ok = !bs_shadow[k] && rasters.pl_bs[k].within(threshold);
        let ris_ok = match center {
            Some(c) => rasters.pl_ris_at(k).within(threshold) && !is_link_blocked(c, rasters.grid.point(k), blockers),
            None => false,
        };
        let s = ServingStatus::from_links(bs_ok, ris_ok);
        (s, rasters.rates[k].for_status(s))
    })
}

pub(crate) fn realization_metrics(rasters: &LinkRasters, blockers: &[Blocker], bs_shadow: &[bool]) -> MetricsReport {
    MetricsReport::from_status_rates(realization_points(rasters, blockers, bs_shadow))
}
