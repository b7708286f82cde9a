//! Link budgets for the direct BS link and the near-field BS-RIS-user cascade.
//!
//! The cascade path loss assumes every element is phase-aligned for the
//! user, so the per-element contributions add coherently:
//!
//! ```text
//! PL_RIS = 1/(Gt Gr G) * 64 pi^3 / (a b lambda^2)
//!          / | sum_n sqrt(F(theta_i,n) F(theta_r,n)) / (d1,n d2,n) |^2
//! ```
//!
//! [`pl_ris`] evaluates this element by element from [`element_angles`] and
//! is the reference. [`crate::kernel::CascadeKernel`] evaluates the same sum
//! over whole user rasters.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::scene::{ElementLattice, SceneLayout, Vec3};

/// Linear path loss, or the "no link" sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLoss {
    Finite(f64),
    Infinite,
}

impl PathLoss {
    pub fn from_linear(v: f64) -> Self {
        if v.is_finite() {
            PathLoss::Finite(v)
        } else {
            PathLoss::Infinite
        }
    }

    /// The linear value, `f64::INFINITY` for the sentinel.
    pub fn linear(self) -> f64 {
        match self {
            PathLoss::Finite(v) => v,
            PathLoss::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, PathLoss::Finite(_))
    }

    /// Whether the loss supports a link under the threshold.
    pub fn within(self, threshold: f64) -> bool {
        match self {
            PathLoss::Finite(v) => v <= threshold,
            PathLoss::Infinite => false,
        }
    }

    pub fn db(self) -> f64 {
        10.0 * self.linear().log10()
    }
}

/// Path losses of both links at one user location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub pl_ris: PathLoss,
    pub pl_bs: PathLoss,
}

/// Incidence and reflection geometry at one element.
///
/// Elevations are measured from the element normal. Azimuths are measured in
/// the panel plane; the element pattern ignores them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementAngles {
    pub theta_i: f64,
    pub phi_i: f64,
    pub theta_r: f64,
    pub phi_r: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Normalized element power pattern `cos^q(theta)`, zero behind the panel.
pub fn element_pattern(theta: f64, exponent: f64) -> f64 {
    if theta > FRAC_PI_2 {
        0.0
    } else {
        theta.cos().max(0.0).powf(exponent)
    }
}

fn in_plane_basis(normal: Vec3) -> (Vec3, Vec3) {
    let seed = if normal.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 0.0, 1.0) };
    let u = seed - normal * seed.dot(normal);
    let u = u * (1.0 / u.norm());
    (u, normal.cross(u))
}

fn elevation_azimuth(v: Vec3, dist: f64, normal: Vec3, basis: (Vec3, Vec3)) -> (f64, f64) {
    let theta = (normal.dot(v) / dist).clamp(-1.0, 1.0).acos();
    let phi = v.dot(basis.1).atan2(v.dot(basis.0));
    (theta, phi)
}

pub fn element_angles(bs: Vec3, user: Vec3, elem_pos: Vec3, normal: Vec3) -> Result<ElementAngles> {
    let to_bs = bs - elem_pos;
    let to_user = user - elem_pos;
    let d1 = to_bs.norm();
    let d2 = to_user.norm();
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::DegenerateGeometry("element coincides with a link endpoint"));
    }
    let basis = in_plane_basis(normal);
    let (theta_i, phi_i) = elevation_azimuth(to_bs, d1, normal, basis);
    let (theta_r, phi_r) = elevation_azimuth(to_user, d2, normal, basis);
    Ok(ElementAngles { theta_i, phi_i, theta_r, phi_r, d1, d2 })
}

/// `64 pi^3 / (Gt Gr G a b lambda^2)`, the constant in front of the inverse
/// squared amplitude sum.
pub fn cascade_constant(layout: &SceneLayout, elem_a: f64, elem_b: f64, element_gain: f64) -> f64 {
    let lambda = layout.wavelength;
    64.0 * PI.powi(3) / (layout.gains_gt_gr * element_gain * elem_a * elem_b * lambda * lambda)
}

/// Cascade path loss from the coherent amplitude sum.
pub(crate) fn cascade_from_sum(constant: f64, amplitude_sum: f64) -> PathLoss {
    if amplitude_sum > 0.0 {
        PathLoss::from_linear(constant / (amplitude_sum * amplitude_sum))
    } else {
        PathLoss::Infinite
    }
}

/// Near-field path loss of the BS-RIS-user cascade with optimal phases,
/// evaluated element by element.
pub fn pl_ris(
    bs: Vec3,
    user: Vec3,
    lattice: &ElementLattice,
    layout: &SceneLayout,
    element_gain: f64,
    pattern_exponent: f64,
) -> Result<PathLoss> {
    let mut sum = 0.0;
    for &p in &lattice.positions {
        let ang = element_angles(bs, user, p, lattice.normal)?;
        let f = element_pattern(ang.theta_i, pattern_exponent) * element_pattern(ang.theta_r, pattern_exponent);
        sum += f.sqrt() / (ang.d1 * ang.d2);
    }
    let c = cascade_constant(layout, lattice.elem_a, lattice.elem_b, element_gain);
    Ok(cascade_from_sum(c, sum))
}

/// Free-space loss of the direct link, `(4 pi d / lambda)^2 / (Gt Gr)`.
pub fn pl_bs(bs: Vec3, user: Vec3, layout: &SceneLayout) -> PathLoss {
    let k = 4.0 * PI / layout.wavelength;
    PathLoss::from_linear(k * k * bs.distance(user).powi(2) / layout.gains_gt_gr)
}

/// Phase shift in `[0, 2 pi)` that aligns an element whose two hops total
/// `d1 + d2` meters.
pub fn phase_config(d1: f64, d2: f64, lambda: f64) -> f64 {
    let cycles = (d1 + d2) / lambda;
    let psi = TAU * (cycles - cycles.floor());
    if psi >= TAU {
        0.0
    } else {
        psi
    }
}

/// Fraunhofer array distance `2 N sqrt(a^2 + b^2) / lambda`, evaluated
/// literally with `N` the total element count.
pub fn fraunhofer_distance(n_elements: usize, a: f64, b: f64, lambda: f64) -> f64 {
    2.0 * n_elements as f64 * a.hypot(b) / lambda
}
