//! Monte Carlo simulation and deployment search for a street-canyon mmWave
//! cell assisted by a tilted reconfigurable intelligent surface.
//!
//! Coordinates: the BS array center is at `(0, 0, h_BS)`, the street spans
//! `x in [-R, R]`, `y in (0, y_RIS)`, and the RIS hangs on the far facade at
//! `y = y_RIS`. Blockers are vertical screens on the lane `y = y_B`.

pub mod channel;
pub mod error;
pub mod kernel;
pub mod optimizer;
pub mod scene;
pub mod serving;
pub mod stochastic;

pub use channel::{fraunhofer_distance, phase_config, pl_bs, pl_ris, PathLoss};
pub use error::{Error, Result};
pub use kernel::CascadeKernel;
pub use optimizer::{
    optimize_height_tilt, rate_cdf, sweep_x, tilt_grid, Candidate, HoldMode, Metric, RateCdf, SearchResult, SearchSpec,
    SweepResult,
};
pub use scene::{build_lattice, is_blocked, is_link_blocked, Blocker, ElementLattice, RisConfig, SceneLayout, Vec3};
pub use serving::{
    classify, evaluate_field, metrics, optimal_beta, rate_both, rate_single, FieldMap, LinkRasters, MetricsReport,
    ServingStatus, UserGrid,
};
pub use stochastic::{
    expected_metrics, BlockerRealization, DrawRng, DrawSet, McEstimate, MetricsEstimate, RNG_IDENTITY,
};
