use rayon::prelude::*;

use super::geometry::{dot, normalize, sample_offset, sub, EyePose, Vec3};
use super::{
    CameraConfig, EyeImage, EyeModelConfig, EyeState, ImageGeometry, LightingConfig, LightingModel,
};
use crate::error::Result;

/// Renders a supersampled grayscale eye image.
pub fn render_eye_image(
    model: &EyeModelConfig,
    camera: &CameraConfig,
    state: &EyeState,
    lighting: &LightingConfig,
) -> Result<EyeImage> {
    model.validate()?;
    camera.validate()?;
    lighting.validate()?;
    state.validate(model)?;

    let tracer = Tracer::new(model, camera, state, lighting);
    let geometry = ImageGeometry::from_camera(camera);
    let (rows, cols) = (geometry.rows, geometry.cols);
    let n = model.supersampling_factor;
    let pitch = geometry.mm_per_pixel_x;
    let shift_col = camera.shift_x / pitch;
    let shift_row = camera.shift_y / pitch;
    let inv_samples = 1.0 / (n as f64 * n as f64);

    let mut intensities = vec![0.0; rows * cols];
    intensities
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(r, row)| {
            let mut buf = vec![0.0; n as usize];
            for (c, out) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                let mut first = None;
                let mut uniform = true;
                for ky in 0..n {
                    let v = sample_offset(r, rows, ky, n) - shift_row;
                    for (kx, slot) in buf.iter_mut().enumerate() {
                        let u = sample_offset(c, cols, kx as u32, n) + shift_col;
                        *slot = tracer.sample(u * pitch, v * pitch);
                        let f = *first.get_or_insert(*slot);
                        uniform &= *slot == f;
                    }
                    acc += symmetric_sum(&buf);
                }
                *out = match (uniform, first) {
                    (true, Some(f)) => f,
                    _ => (acc * inv_samples).clamp(0.0, 1.0),
                };
            }
        });

    let fill = (model.reflectance_skin * lighting.ambient).clamp(0.0, 1.0);
    EyeImage::new(geometry, intensities, fill)
}

/// Sum whose rounding is unchanged when `v` is reversed, so mirrored pixels
/// get identical values.
fn symmetric_sum(v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for k in 0..n / 2 {
        acc += v[k] + v[n - 1 - k];
    }
    if n % 2 == 1 {
        acc += v[n / 2];
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Skin,
    Sclera,
    Iris,
    Pupil,
}

/// Per-render ray caster.
struct Tracer<'a> {
    model: &'a EyeModelConfig,
    lighting: &'a LightingConfig,
    pose: EyePose,
    /// Apex plane distance.
    d: f64,
    /// `|C|^2 - R^2` for the camera-origin sphere intersection.
    sphere_c: f64,
    /// Iris plane depth along the local gaze axis.
    iris_depth: f64,
    pupil_radius_sq: f64,
    /// Camera origin in eye-local coordinates.
    origin_local: Vec3,
    lid_a: f64,
    lid_b: f64,
    lid_sin: f64,
    lid_cos: f64,
    /// Zero or two sources, mirror images of each other.
    lights: Vec<Vec3>,
}

impl<'a> Tracer<'a> {
    fn new(
        model: &'a EyeModelConfig,
        camera: &CameraConfig,
        state: &EyeState,
        lighting: &'a LightingConfig,
    ) -> Self {
        let pose = EyePose::new(model, camera, state);
        let d = camera.distance_to_eye;
        let r = pose.radius;
        let center = pose.center;
        let iris_depth = model.iris_plane_depth();
        let pupil_radius = state.pupil_diameter / 2.0;
        let origin_local = pose.to_local([-center[0], -center[1], -center[2]]);
        let lights = match lighting.model {
            LightingModel::Ambient => Vec::new(),
            LightingModel::TwoPoint => {
                // Relative to the pupil centre in primary position; the
                // sources travel with the sensor frame.
                let pupil_z = center[2] - iris_depth;
                let z = pupil_z - lighting.source_distance;
                let y = lighting.source_offset_y - camera.shift_y;
                [-lighting.source_offset_x, lighting.source_offset_x]
                    .into_iter()
                    .map(|x| [x + camera.shift_x, y, z])
                    .collect()
            }
        };
        Self {
            model,
            lighting,
            pose,
            d,
            sphere_c: dot(center, center) - r * r,
            iris_depth,
            pupil_radius_sq: pupil_radius * pupil_radius,
            origin_local,
            lid_a: model.eyelid_aperture_width / 2.0,
            lid_b: model.eyelid_aperture_height / 2.0,
            lid_sin: model.eyelid_tilt.to_radians().sin(),
            lid_cos: model.eyelid_tilt.to_radians().cos(),
            lights,
        }
    }

    /// Intensity along the ray through apex-plane point `(x, y)` mm.
    fn sample(&self, x: f64, y: f64) -> f64 {
        let (region, point, normal) = self.trace(x, y);
        let reflectance = match region {
            Region::Skin => self.model.reflectance_skin,
            Region::Sclera => self.model.reflectance_sclera,
            Region::Iris => self.model.reflectance_iris,
            Region::Pupil => self.model.reflectance_pupil,
        };
        (reflectance * self.shading(point, normal)).clamp(0.0, 1.0)
    }

    fn trace(&self, x: f64, y: f64) -> (Region, Vec3, Vec3) {
        let d = self.d;
        let skin_normal = [0.0, 0.0, -1.0];
        if self.model.eyelids {
            // y grows downward, so the raised temporal corner lies along (cos, -sin).
            let yl = y - self.model.eyelid_offset_y;
            let ex = (x * self.lid_cos - yl * self.lid_sin) / self.lid_a;
            let ey = (x * self.lid_sin + yl * self.lid_cos) / self.lid_b;
            if ex * ex + ey * ey > 1.0 {
                return (Region::Skin, [x, y, d], skin_normal);
            }
        }
        let dir = [x, y, d];
        let center = self.pose.center;
        let a = dot(dir, dir);
        let b = dir[2] * center[2];
        let disc = b * b - a * self.sphere_c;
        if disc < 0.0 {
            let s = center[2] / d;
            return (Region::Skin, [x * s, y * s, center[2]], skin_normal);
        }
        let t = (b - disc.sqrt()) / a;
        let hit = [t * x, t * y, t * d];
        let rel = sub(hit, center);
        let local = self.pose.to_local(rel);
        // -local.z is R·cos(angle from gaze axis); the limbus sits at the iris plane depth.
        if -local[2] <= self.iris_depth {
            let r = self.pose.radius;
            let normal = [rel[0] / r, rel[1] / r, rel[2] / r];
            return (Region::Sclera, hit, normal);
        }
        let dir_local = self.pose.to_local(dir);
        let o = self.origin_local;
        let s = (-self.iris_depth - o[2]) / dir_local[2];
        let qx = o[0] + s * dir_local[0];
        let qy = o[1] + s * dir_local[1];
        let region = if qx * qx + qy * qy <= self.pupil_radius_sq {
            Region::Pupil
        } else {
            Region::Iris
        };
        let point = [s * dir[0], s * dir[1], s * dir[2]];
        (region, point, self.pose.gaze())
    }

    fn shading(&self, point: Vec3, normal: Vec3) -> f64 {
        let mut lambert = [0.0; 2];
        for (slot, light) in lambert.iter_mut().zip(&self.lights) {
            let l = normalize(sub(*light, point));
            *slot = self.lighting.source_power * dot(normal, l).max(0.0);
        }
        self.lighting.ambient + symmetric_sum(&lambert)
    }
}
