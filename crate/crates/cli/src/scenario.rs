//! Scenario document: a TOML file with `[layout]`, `[ris]`, `[blockers]`,
//! `[search]` and `[run]` tables. Every key is optional and defaults to the
//! 60 GHz street cell; unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use risdeploy_core::{HoldMode, Metric, RisConfig, SceneLayout, SearchSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub layout: LayoutSection,
    pub ris: RisSection,
    pub blockers: BlockerSection,
    pub search: SearchSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub h_bs: f64,
    pub road_halfwidth: f64,
    pub y_ris: f64,
    pub lane_y: f64,
    pub blocker_height: f64,
    pub blocker_length: f64,
    pub frequency_ghz: f64,
    pub gains_gt_gr: f64,
    pub snr_db: f64,
    pub pl_threshold: f64,
    pub grid_resolution: f64,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self {
            h_bs: 10.0,
            road_halfwidth: 50.0,
            y_ris: 14.0,
            lane_y: 6.0,
            blocker_height: 2.0,
            blocker_length: 4.8,
            frequency_ghz: 60.0,
            gains_gt_gr: 100.0,
            snr_db: 90.0,
            pl_threshold: 2.5e8,
            grid_resolution: 0.5,
        }
    }
}

/// Speed of light used for the frequency to wavelength conversion, chosen so
/// that 60 GHz maps to exactly 5 mm.
const LIGHT_SPEED: f64 = 3.0e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisSection {
    pub x: f64,
    pub height: f64,
    pub tilt_deg: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Element size along x; half a wavelength when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elem_a: Option<f64>,
    /// Element size along the tilted axis; half a wavelength when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elem_b: Option<f64>,
    pub element_gain: f64,
    pub pattern_exponent: f64,
}

impl Default for RisSection {
    fn default() -> Self {
        Self {
            x: 0.0,
            height: 10.0,
            tilt_deg: 30.0,
            n_rows: 200,
            n_cols: 200,
            elem_a: None,
            elem_b: None,
            element_gain: 8.0,
            pattern_exponent: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockerSection {
    /// Mean of the Poisson part of the blocker count `M = 1 + Poisson`.
    pub lambda_b: f64,
    /// Left edges of the screens used by `snapshot`.
    pub positions: Vec<f64>,
}

impl Default for BlockerSection {
    fn default() -> Self {
        Self { lambda_b: 1.0, positions: vec![-15.0, 2.5, 13.8, 30.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricName {
    CoverageRatio,
    AreaAvgRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Fixed,
    OptimizeTilt,
    OptimizeHeightTilt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub metric: MetricName,
    pub x_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub tilt_resolution_deg: f64,
    pub sweep_mode: SweepMode,
    /// Draws for the inner height/tilt search of `optimize-height-tilt`.
    pub inner_draws: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            metric: MetricName::AreaAvgRate,
            x_values: (-4..=4).map(|k| 10.0 * k as f64).collect(),
            h_values: (3..=10).map(|k| 2.0 * k as f64).collect(),
            tilt_resolution_deg: 1.0,
            sweep_mode: SweepMode::OptimizeHeightTilt,
            inner_draws: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub n_draws: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { n_draws: 500, seed: 1, out_dir: PathBuf::from("out"), threads: 0 }
    }
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let s: ScenarioFile = toml::from_str(text).context("invalid scenario document")?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn wavelength(&self) -> f64 {
        LIGHT_SPEED / (self.layout.frequency_ghz * 1e9)
    }

    pub fn scene_layout(&self) -> SceneLayout {
        let l = &self.layout;
        SceneLayout {
            h_bs: l.h_bs,
            road_halfwidth: l.road_halfwidth,
            y_ris: l.y_ris,
            lane_y: l.lane_y,
            blocker_height: l.blocker_height,
            blocker_length: l.blocker_length,
            wavelength: self.wavelength(),
            gains_gt_gr: l.gains_gt_gr,
            snr: db_to_linear(l.snr_db),
            pl_threshold: l.pl_threshold,
            grid_resolution: l.grid_resolution,
        }
    }

    /// The configured panel; its tilt is not checked against the
    /// feasibility bound here.
    pub fn ris_config(&self) -> RisConfig {
        let r = &self.ris;
        let half = self.wavelength() / 2.0;
        RisConfig {
            x: r.x,
            height: r.height,
            tilt: r.tilt_deg.to_radians(),
            n_rows: r.n_rows,
            n_cols: r.n_cols,
            elem_a: r.elem_a.unwrap_or(half),
            elem_b: r.elem_b.unwrap_or(half),
            element_gain: r.element_gain,
            pattern_exponent: r.pattern_exponent,
        }
    }

    pub fn search_spec(&self) -> SearchSpec {
        let s = &self.search;
        SearchSpec {
            metric: match s.metric {
                MetricName::CoverageRatio => Metric::CoverageRatio,
                MetricName::AreaAvgRate => Metric::AreaAvgRate,
            },
            x_values: s.x_values.clone(),
            h_values: s.h_values.clone(),
            tilt_resolution: s.tilt_resolution_deg.to_radians(),
            n_draws: self.run.n_draws,
            seed: self.run.seed,
            lambda_b: self.blockers.lambda_b,
        }
    }

    pub fn hold_mode(&self) -> HoldMode {
        match self.search.sweep_mode {
            SweepMode::Fixed => HoldMode::Fixed,
            SweepMode::OptimizeTilt => HoldMode::OptimizeTilt,
            SweepMode::OptimizeHeightTilt => HoldMode::OptimizeHeightTilt { inner_draws: self.search.inner_draws },
        }
    }

    /// Schema checks beyond what the core validates per operation.
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.layout.frequency_ghz.is_finite() && self.layout.frequency_ghz > 0.0) {
            bail!("layout.frequency_ghz must be finite and > 0");
        }
        if !self.layout.snr_db.is_finite() {
            bail!("layout.snr_db must be finite");
        }
        self.scene_layout().validate()?;
        let ris = self.ris_config();
        if ris.n_rows == 0 || ris.n_cols == 0 {
            bail!("ris.n_rows and ris.n_cols must be >= 1");
        }
        if !(ris.elem_a > 0.0 && ris.elem_b > 0.0) {
            bail!("ris.elem_a and ris.elem_b must be > 0");
        }
        self.search_spec().validate()?;
        if self.search.inner_draws == 0 {
            bail!("search.inner_draws must be >= 1");
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
