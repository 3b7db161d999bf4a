//! Binocular vergence, the falling-away floor, and eye placement.
//!
//! Lengths are in meters; `world_scale` converts them to model units
//! (curvature −1), so every effect grows with it.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::space::Space;
use crate::walk::{Axis, CameraFrame, Command};

/// Interpupillary distance and world scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EyeConfig {
    pub ipd: f64,
    #[serde(default = "one")]
    pub world_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for EyeConfig {
    fn default() -> Self {
        Self {
            ipd: 0.062,
            world_scale: 1.0,
        }
    }
}

impl EyeConfig {
    /// Validates `ipd > 0` and `world_scale > 0`; an ipd outside the human
    /// range 4–8 cm is allowed but logged.
    pub fn new(ipd: f64, world_scale: f64) -> Result<Self> {
        if !(ipd > 0.0 && ipd.is_finite()) {
            return precondition(format!("ipd must be positive, got {ipd}"));
        }
        if !(world_scale > 0.0 && world_scale.is_finite()) {
            return precondition(format!("world scale must be positive, got {world_scale}"));
        }
        if !(0.04..=0.08).contains(&ipd) {
            log::warn!("ipd {ipd} m is outside the typical 0.04-0.08 m range");
        }
        Ok(Self { ipd, world_scale })
    }

    /// Half the eye separation in model units.
    pub fn half_baseline(&self) -> f64 {
        0.5 * self.ipd * self.world_scale
    }
}

/// Inward rotation of each eye fixating a point at distance `d` (meters)
/// straight ahead of the midpoint between the eyes.
///
/// Euclidean: `atan((ipd/2)/d)`. Hyperbolic (ℍ³, and the horizontal ℍ² of
/// ℍ²×𝔼): the right triangle eye–midpoint–target has `tan A = tanh(d)/sinh(ipd/2)`
/// at the eye, and the vergence is `π/2 − A = atan(sinh(ipd/2)/tanh(d))`.
pub fn vergence_angle(eye: &EyeConfig, d: f64, space: Space) -> Result<f64> {
    if !(d > 0.0) {
        return precondition(format!("fixation distance must be positive, got {d}"));
    }
    Ok(match space {
        Space::Euclidean => (0.5 * eye.ipd / d).atan(),
        Space::H3 | Space::H2E => (eye.half_baseline().sinh() / (d * eye.world_scale).tanh()).atan(),
    })
}

/// Vergence for a target at infinity in hyperbolic space, `atan(sinh(ipd/2))`.
pub fn vergence_limit(eye: &EyeConfig) -> f64 {
    eye.half_baseline().sinh().atan()
}

/// Hyperbolic distance to the floor plane from the point `t` along a sight
/// line that starts at height `h` parallel to the floor:
/// `sinh(result) = sinh(h)·cosh(t)`.
pub fn floor_drop_distance(h: f64, t: f64) -> Result<f64> {
    if !(h > 0.0) {
        return precondition(format!("eye height must be positive, got {h}"));
    }
    if !(t >= 0.0) {
        return precondition(format!("sight-line parameter must be nonnegative, got {t}"));
    }
    Ok((h.sinh() * t.cosh()).asinh())
}

/// Left and right eye frames, `ipd·world_scale` apart along the camera's
/// right axis with the camera at their midpoint.
pub fn eye_frames(camera: &CameraFrame, eye: &EyeConfig) -> (CameraFrame, CameraFrame) {
    let half = eye.half_baseline();
    (
        camera.apply(&Command::translate(Axis::Right, -half)),
        camera.apply(&Command::translate(Axis::Right, half)),
    )
}
