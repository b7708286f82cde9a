//! Benchmark fixtures shared by the criterion targets.

use risdeploy_core::{DrawSet, LinkRasters, RisConfig, SceneLayout};

/// The reference street cell with the panel at the origin, 10 m up, 30 deg tilt.
pub fn reference_panel() -> (SceneLayout, RisConfig) {
    let layout = SceneLayout::default();
    let ris = RisConfig::standard(&layout, 0.0, 10.0, 30f64.to_radians());
    (layout, ris)
}

pub fn reference_rasters() -> LinkRasters {
    let (layout, ris) = reference_panel();
    LinkRasters::compute(&layout, Some(&ris)).expect("reference panel is feasible")
}

pub fn reference_draws(n_draws: usize) -> DrawSet {
    DrawSet::sample(&SceneLayout::default(), 1.0, n_draws, 1).expect("valid draw parameters")
}
