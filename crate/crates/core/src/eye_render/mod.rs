//! Procedural synthetic eye renderer.
//!
//! The eye is an ideal sphere carrying a flat iris disc (with a concentric
//! pupil) recessed behind the limbus circle, seen through an optional static
//! elliptical eyelid aperture cut into a skin plane. A pinhole camera looks at
//! the eye along the optical axis; images are formed by ray casting at a
//! supersampled grid of points.
//!
//! Frame conventions (left eye, camera facing the subject):
//!
//! * image columns grow toward the temporal side (+x), rows grow downward (+y);
//! * `yaw > 0` rotates the eye toward the nasal side (−x), `pitch > 0` downward;
//! * `shift_x > 0` moves the sensor frame away from the nose (+x) and
//!   `shift_y > 0` moves it upward (−y).
//!
//! Millimetre-per-pixel values are defined on the plane tangent to the cornea
//! apex at the primary position, `distance_to_eye` in front of the camera.

mod geometry;
mod pgm;
mod render;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use geometry::{project_eye_point, SpherePoint};
pub use pgm::{export_pgm, import_eye_image, ImageMetadata};
pub use render::render_eye_image;

/// Geometry and reflectance of the parametric eye.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EyeModelConfig {
    pub eyeball_diameter: f64,
    pub iris_diameter: f64,
    pub reflectance_sclera: f64,
    pub reflectance_iris: f64,
    pub reflectance_pupil: f64,
    pub reflectance_skin: f64,
    /// When false the whole eyeball silhouette is visible.
    pub eyelids: bool,
    pub eyelid_aperture_height: f64,
    pub eyelid_aperture_width: f64,
    /// Canthal tilt in degrees; positive raises the temporal (+x) corner.
    pub eyelid_tilt: f64,
    /// Vertical offset of the aperture centre from the pupil axis, mm, + down.
    pub eyelid_offset_y: f64,
    /// Samples per pixel along each axis.
    pub supersampling_factor: u32,
}

impl Default for EyeModelConfig {
    fn default() -> Self {
        Self {
            eyeball_diameter: 24.0,
            iris_diameter: 9.5,
            reflectance_sclera: 0.85,
            reflectance_iris: 0.25,
            reflectance_pupil: 0.05,
            reflectance_skin: 0.65,
            eyelids: true,
            eyelid_aperture_height: 14.0,
            eyelid_aperture_width: 30.0,
            eyelid_tilt: 5.0,
            eyelid_offset_y: 0.5,
            supersampling_factor: 4,
        }
    }
}

impl EyeModelConfig {
    pub fn eyeball_radius(&self) -> f64 {
        self.eyeball_diameter / 2.0
    }

    pub fn iris_radius(&self) -> f64 {
        self.iris_diameter / 2.0
    }

    /// Distance from the eyeball centre to the iris plane.
    pub fn iris_plane_depth(&self) -> f64 {
        let r = self.eyeball_radius();
        let ri = self.iris_radius();
        (r * r - ri * ri).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.iris_diameter > 0.0) {
            return Err(Error::config("eye.iris_diameter", "must be > 0"));
        }
        if !(self.eyeball_diameter > self.iris_diameter) {
            return Err(Error::config(
                "eye.eyeball_diameter",
                "must exceed iris_diameter",
            ));
        }
        for (key, value) in [
            ("eye.reflectance_sclera", self.reflectance_sclera),
            ("eye.reflectance_iris", self.reflectance_iris),
            ("eye.reflectance_pupil", self.reflectance_pupil),
            ("eye.reflectance_skin", self.reflectance_skin),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::config(key, format!("{value} outside [0, 1]")));
            }
        }
        if !(self.reflectance_sclera > self.reflectance_iris
            && self.reflectance_iris > self.reflectance_pupil)
        {
            return Err(Error::config(
                "eye.reflectance_iris",
                "reflectances must satisfy sclera > iris > pupil",
            ));
        }
        if !(self.eyelid_aperture_height > 0.0) {
            return Err(Error::config("eye.eyelid_aperture_height", "must be > 0"));
        }
        if !(self.eyelid_aperture_width > 0.0) {
            return Err(Error::config("eye.eyelid_aperture_width", "must be > 0"));
        }
        if !(self.eyelid_tilt.abs() <= 45.0) {
            return Err(Error::config(
                "eye.eyelid_tilt",
                "must lie in [-45, 45] degrees",
            ));
        }
        if !(self.eyelid_offset_y.abs() < self.eyelid_aperture_height / 2.0) {
            return Err(Error::config(
                "eye.eyelid_offset_y",
                "must keep the pupil axis inside the aperture",
            ));
        }
        if self.supersampling_factor < 1 {
            return Err(Error::config("eye.supersampling_factor", "must be >= 1"));
        }
        Ok(())
    }
}

/// Pinhole camera standing in for the photosensor frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Camera to cornea-apex plane, mm.
    pub distance_to_eye: f64,
    /// Horizontal field of view, degrees.
    pub field_of_view: f64,
    pub image_rows: usize,
    pub image_cols: usize,
    /// Sensor shift, mm; positive away from the nasal side.
    pub shift_x: f64,
    /// Sensor shift, mm; positive upward.
    pub shift_y: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            distance_to_eye: 50.0,
            field_of_view: 45.0,
            image_rows: 240,
            image_cols: 320,
            shift_x: 0.0,
            shift_y: 0.0,
        }
    }
}

impl CameraConfig {
    /// Pixel pitch on the apex plane (square pixels).
    pub fn mm_per_pixel(&self) -> f64 {
        let half_fov = (self.field_of_view / 2.0).to_radians();
        2.0 * self.distance_to_eye * half_fov.tan() / self.image_cols as f64
    }

    /// Optical centre in fractional pixel indices (row, col).
    pub fn optical_center(&self) -> (f64, f64) {
        (
            (self.image_rows as f64 - 1.0) / 2.0,
            (self.image_cols as f64 - 1.0) / 2.0,
        )
    }

    pub fn is_shifted(&self) -> bool {
        self.shift_x != 0.0 || self.shift_y != 0.0
    }

    pub fn with_shift(&self, shift_x: f64, shift_y: f64) -> Self {
        Self {
            shift_x,
            shift_y,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_to_eye > 0.0) {
            return Err(Error::config("camera.distance_to_eye", "must be > 0"));
        }
        if !(self.field_of_view > 0.0 && self.field_of_view < 180.0) {
            return Err(Error::config(
                "camera.field_of_view",
                format!("{} outside (0, 180) degrees", self.field_of_view),
            ));
        }
        if self.image_rows == 0 {
            return Err(Error::config("camera.image_rows", "must be > 0"));
        }
        if self.image_cols == 0 {
            return Err(Error::config("camera.image_cols", "must be > 0"));
        }
        if !self.shift_x.is_finite() {
            return Err(Error::config("camera.shift_x", "must be finite"));
        }
        if !self.shift_y.is_finite() {
            return Err(Error::config("camera.shift_y", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightingModel {
    /// Uniform ambient illumination.
    Ambient,
    /// Ambient plus two Lambertian point sources beside and below the eye.
    TwoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightingConfig {
    pub model: LightingModel,
    pub ambient: f64,
    /// Per-source Lambert gain (two-point model only).
    pub source_power: f64,
    /// Sources sit at ±`source_offset_x` mm horizontally and `source_offset_y`
    /// mm below the pupil centre, `source_distance` mm toward the camera.
    /// They move together with the sensor frame.
    pub source_offset_x: f64,
    pub source_offset_y: f64,
    pub source_distance: f64,
}

impl Default for LightingConfig {
    fn default() -> Self {
        Self {
            model: LightingModel::Ambient,
            ambient: 1.0,
            source_power: 0.5,
            source_offset_x: 14.0,
            source_offset_y: 10.0,
            source_distance: 30.0,
        }
    }
}

impl LightingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ambient >= 0.0 && self.ambient.is_finite()) {
            return Err(Error::config("lighting.ambient", "must be finite and >= 0"));
        }
        if !(self.source_power >= 0.0 && self.source_power.is_finite()) {
            return Err(Error::config(
                "lighting.source_power",
                "must be finite and >= 0",
            ));
        }
        if !(self.source_distance > 0.0) {
            return Err(Error::config("lighting.source_distance", "must be > 0"));
        }
        Ok(())
    }
}

/// Ground-truth pose of the simulated eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeState {
    /// Horizontal rotation in degrees, positive toward the nose.
    pub yaw: f64,
    /// Vertical rotation in degrees, positive downward.
    pub pitch: f64,
    pub pupil_diameter: f64,
}

/// Largest rotation the renderer accepts on either axis.
pub const MAX_ROTATION_DEG: f64 = 45.0;

impl EyeState {
    pub fn new(yaw: f64, pitch: f64, pupil_diameter: f64) -> Self {
        Self {
            yaw,
            pitch,
            pupil_diameter,
        }
    }

    pub fn validate(&self, model: &EyeModelConfig) -> Result<()> {
        if !(self.yaw.abs() <= MAX_ROTATION_DEG) {
            return Err(Error::config(
                "state.yaw",
                format!("{} outside ±{MAX_ROTATION_DEG}°", self.yaw),
            ));
        }
        if !(self.pitch.abs() <= MAX_ROTATION_DEG) {
            return Err(Error::config(
                "state.pitch",
                format!("{} outside ±{MAX_ROTATION_DEG}°", self.pitch),
            ));
        }
        if !(self.pupil_diameter > 0.0 && self.pupil_diameter < model.iris_diameter) {
            return Err(Error::config(
                "state.pupil_diameter",
                format!(
                    "{} must lie in (0, iris_diameter = {})",
                    self.pupil_diameter, model.iris_diameter
                ),
            ));
        }
        Ok(())
    }
}

/// Slow sinusoidal pupil dilation used while replaying gaze signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PupilDilation {
    /// When false the pupil stays at `frozen_diameter`.
    pub enabled: bool,
    pub min_diameter: f64,
    pub max_diameter: f64,
    pub period_seconds: f64,
    pub frozen_diameter: f64,
}

impl Default for PupilDilation {
    fn default() -> Self {
        Self {
            enabled: true,
            min_diameter: 3.6,
            max_diameter: 4.6,
            period_seconds: 10.0,
            frozen_diameter: 4.0,
        }
    }
}

impl PupilDilation {
    pub fn frozen(diameter: f64) -> Self {
        Self {
            enabled: false,
            frozen_diameter: diameter,
            ..Self::default()
        }
    }

    pub fn diameter_at(&self, t: f64) -> f64 {
        if !self.enabled {
            return self.frozen_diameter;
        }
        let mid = 0.5 * (self.min_diameter + self.max_diameter);
        let amp = 0.5 * (self.max_diameter - self.min_diameter);
        mid + amp * (std::f64::consts::TAU * t / self.period_seconds).sin()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_diameter > 0.0 && self.max_diameter >= self.min_diameter) {
            return Err(Error::config(
                "dilation.max_diameter",
                "requires 0 < min_diameter <= max_diameter",
            ));
        }
        if !(self.period_seconds > 0.0) {
            return Err(Error::config("dilation.period_seconds", "must be > 0"));
        }
        if !(self.frozen_diameter > 0.0) {
            return Err(Error::config("dilation.frozen_diameter", "must be > 0"));
        }
        Ok(())
    }
}

/// Pixel grid geometry shared by every image of one camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGeometry {
    pub rows: usize,
    pub cols: usize,
    pub mm_per_pixel_x: f64,
    pub mm_per_pixel_y: f64,
    /// (row, col) in fractional pixel indices.
    pub optical_center: (f64, f64),
}

impl ImageGeometry {
    pub fn from_camera(camera: &CameraConfig) -> Self {
        let mmpp = camera.mm_per_pixel();
        Self {
            rows: camera.image_rows,
            cols: camera.image_cols,
            mm_per_pixel_x: mmpp,
            mm_per_pixel_y: mmpp,
            optical_center: camera.optical_center(),
        }
    }
}

/// Grayscale reflectance image with projection metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeImage {
    geometry: ImageGeometry,
    intensities: Vec<f64>,
    /// Value seen by sensors outside the frame (periocular skin).
    fill: f64,
}

impl EyeImage {
    pub fn new(geometry: ImageGeometry, intensities: Vec<f64>, fill: f64) -> Result<Self> {
        if geometry.rows == 0 || geometry.cols == 0 {
            return Err(Error::Contract("image dimensions must be > 0".into()));
        }
        if intensities.len() != geometry.rows * geometry.cols {
            return Err(Error::Contract(format!(
                "expected {} intensities, got {}",
                geometry.rows * geometry.cols,
                intensities.len()
            )));
        }
        if !(geometry.mm_per_pixel_x > 0.0 && geometry.mm_per_pixel_y > 0.0) {
            return Err(Error::config("mm_per_pixel", "must be > 0"));
        }
        if let Some(bad) = intensities.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Contract(format!("intensity {bad} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&fill) {
            return Err(Error::Contract(format!("fill {fill} outside [0, 1]")));
        }
        Ok(Self {
            geometry,
            intensities,
            fill,
        })
    }

    pub fn geometry(&self) -> &ImageGeometry {
        &self.geometry
    }

    pub fn rows(&self) -> usize {
        self.geometry.rows
    }

    pub fn cols(&self) -> usize {
        self.geometry.cols
    }

    pub fn mm_per_pixel_x(&self) -> f64 {
        self.geometry.mm_per_pixel_x
    }

    pub fn mm_per_pixel_y(&self) -> f64 {
        self.geometry.mm_per_pixel_y
    }

    pub fn optical_center(&self) -> (f64, f64) {
        self.geometry.optical_center
    }

    pub fn fill(&self) -> f64 {
        self.fill
    }

    /// Row-major intensities.
    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.intensities[row * self.geometry.cols + col]
    }

    /// Intensity at a possibly out-of-frame pixel index.
    pub fn get_or_fill(&self, row: i64, col: i64) -> f64 {
        if row < 0 || col < 0 || row >= self.rows() as i64 || col >= self.cols() as i64 {
            self.fill
        } else {
            self.get(row as usize, col as usize)
        }
    }

    /// Mirror about the vertical image axis.
    pub fn mirrored_horizontally(&self) -> Self {
        let cols = self.cols();
        let mut out = self.intensities.clone();
        for (dst, src) in out.chunks_mut(cols).zip(self.intensities.chunks(cols)) {
            for (d, s) in dst.iter_mut().zip(src.iter().rev()) {
                *d = *s;
            }
        }
        Self {
            geometry: self.geometry,
            intensities: out,
            fill: self.fill,
        }
    }

    /// Same image with every intensity passed through `f` (clamped to [0, 1]).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            geometry: self.geometry,
            intensities: self
                .intensities
                .iter()
                .map(|&v| f(v).clamp(0.0, 1.0))
                .collect(),
            fill: f(self.fill).clamp(0.0, 1.0),
        }
    }
}
