//! Cell geometry: the street layout, the tilted RIS element lattice and the
//! blocker screens that shadow ground users.
//!
//! Coordinates are meters. The BS array center sits at `(0, 0, h_bs)` on the
//! `y = 0` side of the street, the RIS panel is mounted on the opposite side
//! at `y = y_ris`, and users live on the ground plane `z = 0` in between.
//! Blockers are zero-thickness vertical screens standing in the plane
//! `y = lane_y`.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{config_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Ground point `(x, y, 0)`.
    pub const fn ground(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Static geometry and radio constants of the street cell.
///
/// All path-loss related quantities are linear ratios; dB conversion happens
/// at the presentation layer only.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLayout {
    /// BS array-center height. The BS footprint is fixed at `(0, 0)`.
    pub h_bs: f64,
    /// The cell spans `x ∈ [-road_halfwidth, road_halfwidth]`.
    pub road_halfwidth: f64,
    /// Street width; the RIS is mounted at this `y`.
    pub y_ris: f64,
    /// `y` of the blocker lane.
    pub lane_y: f64,
    pub blocker_height: f64,
    pub blocker_length: f64,
    pub wavelength: f64,
    /// Product `G_t * G_r` of transmit and receive antenna gains.
    pub gains_gt_gr: f64,
    /// Linear receive SNR `rho`.
    pub snr: f64,
    /// Largest path loss that still supports a link.
    pub pl_threshold: f64,
    pub grid_resolution: f64,
}

impl Default for SceneLayout {
    /// 60 GHz street cell: 100 m long, 14 m wide, 10 m BS mast, one blocker
    /// lane at 6 m holding 4.8 m x 2 m vehicles, 90 dB SNR.
    fn default() -> Self {
        Self {
            h_bs: 10.0,
            road_halfwidth: 50.0,
            y_ris: 14.0,
            lane_y: 6.0,
            blocker_height: 2.0,
            blocker_length: 4.8,
            wavelength: 0.005,
            gains_gt_gr: 100.0,
            snr: 1e9,
            pl_threshold: 2.5e8,
            grid_resolution: 0.5,
        }
    }
}

impl SceneLayout {
    pub fn bs(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.h_bs)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("h_bs", self.h_bs),
            ("road_halfwidth", self.road_halfwidth),
            ("y_ris", self.y_ris),
            ("lane_y", self.lane_y),
            ("blocker_height", self.blocker_height),
            ("blocker_length", self.blocker_length),
            ("wavelength", self.wavelength),
            ("gains_gt_gr", self.gains_gt_gr),
            ("pl_threshold", self.pl_threshold),
            ("grid_resolution", self.grid_resolution),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return config_err(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.snr.is_finite() && self.snr >= 0.0) {
            return config_err(format!("snr must be finite and >= 0, got {}", self.snr));
        }
        if self.lane_y >= self.y_ris {
            return config_err(format!(
                "blocker lane y = {} must lie strictly inside the street (0, {})",
                self.lane_y, self.y_ris
            ));
        }
        if self.h_bs <= self.blocker_height {
            return config_err(format!("BS height {} must exceed blocker height {}", self.h_bs, self.blocker_height));
        }
        if self.grid_resolution > self.road_halfwidth.min(self.y_ris) {
            return config_err(format!("grid resolution {} exceeds min(road_halfwidth, y_ris)", self.grid_resolution));
        }
        Ok(())
    }

    /// Largest admissible downtilt (exclusive) for a RIS centered at
    /// `(x_ris, y_ris, h_ris)`: `pi/2 - arccos(y_ris / d1)` with `d1` the
    /// BS to RIS-center distance.
    pub fn max_tilt(&self, x_ris: f64, h_ris: f64) -> f64 {
        let center = Vec3::new(x_ris, self.y_ris, h_ris);
        let d1 = self.bs().distance(center);
        FRAC_PI_2 - (self.y_ris / d1).clamp(-1.0, 1.0).acos()
    }
}

/// Placement and build of the reflecting panel.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    pub x: f64,
    /// Height of the panel center.
    pub height: f64,
    /// Downtilt from vertical, radians.
    pub tilt: f64,
    /// Element count along the (tilted) column axis.
    pub n_rows: usize,
    /// Element count along the street (x) axis.
    pub n_cols: usize,
    /// Element length along x.
    pub elem_a: f64,
    /// Element width along the column axis.
    pub elem_b: f64,
    /// Per-element gain `G`.
    pub element_gain: f64,
    /// Exponent `q` of the `cos^q` element power pattern.
    pub pattern_exponent: f64,
}

impl RisConfig {
    /// A 200 x 200 panel of half-wavelength elements (0.5 m square at 60 GHz)
    /// with a `cos^3` pattern and element gain 8.
    pub fn standard(layout: &SceneLayout, x: f64, height: f64, tilt: f64) -> Self {
        Self {
            x,
            height,
            tilt,
            n_rows: 200,
            n_cols: 200,
            elem_a: layout.wavelength / 2.0,
            elem_b: layout.wavelength / 2.0,
            element_gain: 8.0,
            pattern_exponent: 3.0,
        }
    }

    pub fn center(&self, layout: &SceneLayout) -> Vec3 {
        Vec3::new(self.x, layout.y_ris, self.height)
    }

    pub fn n_elements(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn with_tilt(&self, tilt: f64) -> Self {
        Self { tilt, ..self.clone() }
    }

    pub fn validate(&self, layout: &SceneLayout) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return config_err("RIS needs at least one element per axis");
        }
        if !(self.elem_a > 0.0 && self.elem_b > 0.0) {
            return config_err("RIS element dimensions must be > 0");
        }
        if !(self.element_gain > 0.0 && self.element_gain.is_finite()) {
            return config_err("RIS element gain must be finite and > 0");
        }
        if !(self.pattern_exponent >= 0.0 && self.pattern_exponent.is_finite()) {
            return config_err("pattern exponent must be finite and >= 0");
        }
        if !self.x.is_finite() || !self.height.is_finite() {
            return config_err("RIS position must be finite");
        }
        if self.height <= layout.blocker_height {
            return config_err(format!(
                "RIS height {} must exceed blocker height {}",
                self.height, layout.blocker_height
            ));
        }
        let bound = layout.max_tilt(self.x, self.height);
        if !(self.tilt >= 0.0 && self.tilt < bound) {
            return config_err(format!("tilt {:.4} rad outside the feasible interval [0, {:.4})", self.tilt, bound));
        }
        Ok(())
    }
}

/// Rectangular screen `[x, x + length] x [0, height]` in the plane `y = y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blocker {
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub height: f64,
}

impl Blocker {
    /// A vehicle screen on the layout's lane with its left edge at `x`.
    pub fn on_lane(layout: &SceneLayout, x: f64) -> Self {
        Self { x, y: layout.lane_y, length: layout.blocker_length, height: layout.blocker_height }
    }
}

/// Element centers of a tilted RIS.
///
/// Positions are stored row by row: index `j * n_cols + i` holds the element
/// at column offset `i` along x and row offset `j` along the column axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementLattice {
    pub positions: Vec<Vec3>,
    pub normal: Vec3,
    pub center: Vec3,
    pub row_axis: Vec3,
    pub col_axis: Vec3,
    pub n_rows: usize,
    pub n_cols: usize,
    pub elem_a: f64,
    pub elem_b: f64,
}

impl ElementLattice {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Offset of column `i` from the center along the row axis.
    pub fn col_offset(&self, i: usize) -> f64 {
        (i as f64 - (self.n_cols as f64 - 1.0) / 2.0) * self.elem_a
    }

    /// Offset of row `j` from the center along the column axis.
    pub fn row_offset(&self, j: usize) -> f64 {
        (j as f64 - (self.n_rows as f64 - 1.0) / 2.0) * self.elem_b
    }
}

/// Lay out the element centers of `ris`, rotated down by its tilt about the
/// horizontal axis through the panel center.
pub fn build_lattice(ris: &RisConfig, layout: &SceneLayout) -> Result<ElementLattice> {
    ris.validate(layout)?;
    let (sin_t, cos_t) = ris.tilt.sin_cos();
    let row_axis = Vec3::new(1.0, 0.0, 0.0);
    let col_axis = Vec3::new(0.0, -sin_t, cos_t);
    let normal = Vec3::new(0.0, -cos_t, -sin_t);
    let center = ris.center(layout);

    let mut lattice = ElementLattice {
        positions: Vec::with_capacity(ris.n_elements()),
        normal,
        center,
        row_axis,
        col_axis,
        n_rows: ris.n_rows,
        n_cols: ris.n_cols,
        elem_a: ris.elem_a,
        elem_b: ris.elem_b,
    };
    for j in 0..ris.n_rows {
        let v = lattice.row_offset(j);
        for i in 0..ris.n_cols {
            let u = lattice.col_offset(i);
            let p = center + row_axis * u + col_axis * v;
            lattice.positions.push(p);
        }
    }
    Ok(lattice)
}

/// Whether the open segment `tx -> rx` passes through the closed blocker
/// rectangle. Endpoints on the same side of the screen plane never block.
pub fn is_blocked(tx: Vec3, rx: Vec3, blocker: &Blocker) -> bool {
    // Order the endpoints so the predicate is exactly symmetric.
    let (p, q) = if (tx.y, tx.x, tx.z) <= (rx.y, rx.x, rx.z) { (tx, rx) } else { (rx, tx) };
    let (dp, dq) = (p.y - blocker.y, q.y - blocker.y);
    if dp * dq > 0.0 || p.y == q.y {
        return false;
    }
    let t = (blocker.y - p.y) / (q.y - p.y);
    if !(t > 0.0 && t < 1.0) {
        return false;
    }
    let cx = p.x + t * (q.x - p.x);
    let cz = p.z + t * (q.z - p.z);
    cx >= blocker.x && cx <= blocker.x + blocker.length && cz >= 0.0 && cz <= blocker.height
}

/// Whether any blocker shadows the link.
pub fn is_link_blocked(tx: Vec3, rx: Vec3, blockers: &[Blocker]) -> bool {
    blockers.iter().any(|b| is_blocked(tx, rx, b))
}
