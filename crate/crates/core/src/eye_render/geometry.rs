use serde::{Deserialize, Serialize};

use super::{CameraConfig, EyeModelConfig, EyeState};
use crate::error::{Error, Result};

pub(crate) type Vec3 = [f64; 3];

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// A point on the eyeball surface in eye-fixed spherical coordinates.
///
/// `polar_deg` is measured from the gaze axis (0 = cornea apex);
/// `azimuth_deg` is measured in the eye's own frame, 0 toward the temporal
/// side (+x) and 90 downward (+y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub polar_deg: f64,
    pub azimuth_deg: f64,
}

impl SpherePoint {
    pub const APEX: SpherePoint = SpherePoint {
        polar_deg: 0.0,
        azimuth_deg: 0.0,
    };
}

/// World placement of the rotated eyeball.
///
/// World axes: x temporal, y down, z away from the camera (camera at the
/// origin). The eyeball centre sits at `(0, 0, d + R)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EyePose {
    /// Columns are the eye-local axes expressed in world coordinates.
    pub rotation: [[f64; 3]; 3],
    pub center: Vec3,
    pub radius: f64,
}

impl EyePose {
    pub fn new(model: &EyeModelConfig, camera: &CameraConfig, state: &EyeState) -> Self {
        let (sy, cy) = state.yaw.to_radians().sin_cos();
        let (sp, cp) = state.pitch.to_radians().sin_cos();
        // R_yaw(about +y, sign chosen so +yaw turns the gaze to -x) * R_pitch(about +x).
        let rotation = [
            [cy, sy * sp, sy * cp],
            [0.0, cp, -sp],
            [-sy, cy * sp, cy * cp],
        ];
        let radius = model.eyeball_radius();
        Self {
            rotation,
            center: [0.0, 0.0, camera.distance_to_eye + radius],
            radius,
        }
    }

    /// Eye-local vector to world vector.
    pub fn to_world(self, v: Vec3) -> Vec3 {
        let m = &self.rotation;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// World vector to eye-local vector.
    pub fn to_local(self, v: Vec3) -> Vec3 {
        let m = &self.rotation;
        [
            m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
            m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
            m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Outward gaze direction (points at the camera in primary position).
    pub fn gaze(&self) -> Vec3 {
        self.to_world([0.0, 0.0, -1.0])
    }
}

/// Projects an eyeball surface point to fractional (row, col) pixel coordinates.
pub fn project_eye_point(
    model: &EyeModelConfig,
    camera: &CameraConfig,
    state: &EyeState,
    surface_point: SpherePoint,
) -> Result<(f64, f64)> {
    model.validate()?;
    camera.validate()?;
    let pose = EyePose::new(model, camera, state);
    let (st, ct) = surface_point.polar_deg.to_radians().sin_cos();
    let (sa, ca) = surface_point.azimuth_deg.to_radians().sin_cos();
    let normal = pose.to_world([st * ca, st * sa, -ct]);
    let r = pose.radius;
    let p = [
        pose.center[0] + r * normal[0],
        pose.center[1] + r * normal[1],
        pose.center[2] + r * normal[2],
    ];
    // Visible when the outward normal faces the camera at the origin.
    let toward_camera = [-p[0], -p[1], -p[2]];
    if dot(normal, toward_camera) <= 0.0 || p[2] <= 0.0 {
        return Err(Error::NotVisible);
    }
    Ok(project_world_point(camera, p))
}

/// Pinhole projection of a world point to (row, col).
pub(crate) fn project_world_point(camera: &CameraConfig, p: Vec3) -> (f64, f64) {
    let d = camera.distance_to_eye;
    let pitch = camera.mm_per_pixel();
    let (oc_row, oc_col) = camera.optical_center();
    let x = p[0] * d / p[2];
    let y = p[1] * d / p[2];
    (
        oc_row + (y + camera.shift_y) / pitch,
        oc_col + (x - camera.shift_x) / pitch,
    )
}

/// Offset of supersample `k` (of `n`) in pixel `i` of a `len`-pixel axis,
/// measured in pixels from the axis centre. Computed from integers so that
/// mirrored samples are exact negatives of each other.
pub(crate) fn sample_offset(i: usize, len: usize, k: u32, n: u32) -> f64 {
    let n = n as i64;
    let num = (2 * i as i64 + 1 - len as i64) * n + (2 * k as i64 + 1 - n);
    num as f64 / (2 * n) as f64
}
