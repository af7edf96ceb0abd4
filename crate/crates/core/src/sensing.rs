//! Photosensor detection areas, window binning and the photodiode model.
//!
//! A sensor output is the window average of the image pixels under its
//! detection area: `I = Σ G·W / (i·j)`. Masked (rectangular) sensors use
//! `G = 1` with fractional pixel coverage; unmasked circular sensors use a
//! separable Gaussian with σ equal to half the window size on each axis,
//! divided by the raw pixel count of the window.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eye_render::{EyeImage, ImageGeometry};

/// Supersampling used for rectangle coverage when none is given.
pub const DEFAULT_COVERAGE_SUPERSAMPLING: u32 = 4;

/// Electron charge, C.
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum AreaShape {
    /// Masked rectangle; `angle` tilts the long axis from horizontal,
    /// positive when it rises toward +x.
    Rectangle { length: f64, width: f64, angle: f64 },
    /// Unmasked circular sensor with Gaussian sensitivity.
    CircularGaussian { diameter: f64 },
}

/// One sensor's sensitive region on the apex plane.
///
/// Centres are offsets in mm from the pupil centre at primary position,
/// expressed in the image frame (+x temporal, +y down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionArea {
    #[serde(flatten)]
    pub shape: AreaShape,
    pub center_x: f64,
    pub center_y: f64,
}

impl DetectionArea {
    pub fn rectangle(center_x: f64, center_y: f64, length: f64, width: f64, angle: f64) -> Self {
        Self {
            shape: AreaShape::Rectangle {
                length,
                width,
                angle,
            },
            center_x,
            center_y,
        }
    }

    pub fn circle(center_x: f64, center_y: f64, diameter: f64) -> Self {
        Self {
            shape: AreaShape::CircularGaussian { diameter },
            center_x,
            center_y,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_x.is_finite() && self.center_y.is_finite()) {
            return Err(Error::config("area.center", "must be finite"));
        }
        match self.shape {
            AreaShape::Rectangle {
                length,
                width,
                angle,
            } => {
                if !(length > 0.0) {
                    return Err(Error::config("area.length", "must be > 0"));
                }
                if !(width > 0.0) {
                    return Err(Error::config("area.width", "must be > 0"));
                }
                if !(-90.0..=90.0).contains(&angle) {
                    return Err(Error::config(
                        "area.angle",
                        format!("{angle} outside [-90, 90]"),
                    ));
                }
            }
            AreaShape::CircularGaussian { diameter } => {
                if !(diameter > 0.0) {
                    return Err(Error::config("area.diameter", "must be > 0"));
                }
            }
        }
        Ok(())
    }
}

/// Row-major weight grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
}

impl WeightGrid {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }
}

/// Separable zero-mean Gaussian over a `rows × cols` window, σ = half the
/// window size per axis, peak 1, not renormalised.
pub fn gaussian_window_weights(rows: usize, cols: usize) -> WeightGrid {
    let rows = rows.max(1);
    let cols = cols.max(1);
    let sy = rows as f64 / 2.0;
    let sx = cols as f64 / 2.0;
    let cy = (rows as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let mut weights = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let dy = r as f64 - cy;
        for c in 0..cols {
            let dx = c as f64 - cx;
            weights.push(gaussian(dx, dy, sx, sy));
        }
    }
    WeightGrid {
        rows,
        cols,
        weights,
    }
}

fn gaussian(dx: f64, dy: f64, sx: f64, sy: f64) -> f64 {
    (-(dx * dx / (2.0 * sx * sx) + dy * dy / (2.0 * sy * sy))).exp()
}

/// Precomputed pixel weights of one detection area on one image geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    geometry: ImageGeometry,
    /// (row-major index, weight) of in-frame pixels.
    pixels: Vec<(usize, f64)>,
    /// Total weight of pixels outside the frame (these see the fill value).
    outside_weight: f64,
    denominator: f64,
}

impl Footprint {
    pub fn build(
        geometry: &ImageGeometry,
        area: &DetectionArea,
        supersampling: u32,
    ) -> Result<Self> {
        area.validate()?;
        let weighted = match area.shape {
            AreaShape::Rectangle {
                length,
                width,
                angle,
            } => rectangle_weights(geometry, area, length, width, angle, supersampling.max(1)),
            AreaShape::CircularGaussian { diameter } => gaussian_weights(geometry, area, diameter),
        };
        let (entries, denominator) = weighted;
        let (rows, cols) = (geometry.rows as i64, geometry.cols as i64);
        let touches_padded = entries
            .iter()
            .any(|&(r, c, _)| (-rows..2 * rows).contains(&r) && (-cols..2 * cols).contains(&c));
        if !touches_padded {
            return Err(Error::Geometry(format!(
                "detection area at ({:.3}, {:.3}) mm lies outside the padded image frame",
                area.center_x, area.center_y
            )));
        }
        let mut pixels = Vec::with_capacity(entries.len());
        let mut outside_weight = 0.0;
        for (r, c, w) in entries {
            if r >= 0 && c >= 0 && r < rows && c < cols {
                pixels.push(((r * cols + c) as usize, w));
            } else {
                outside_weight += w;
            }
        }
        Ok(Self {
            geometry: *geometry,
            pixels,
            outside_weight,
            denominator,
        })
    }

    pub fn denominator(&self) -> f64 {
        self.denominator
    }

    /// Sum of all weights (in- and out-of-frame).
    pub fn total_weight(&self) -> f64 {
        self.pixels.iter().map(|p| p.1).sum::<f64>() + self.outside_weight
    }

    pub fn apply(&self, image: &EyeImage) -> f64 {
        debug_assert_eq!(
            (image.rows(), image.cols()),
            (self.geometry.rows, self.geometry.cols)
        );
        let data = image.intensities();
        let inside: f64 = self.pixels.iter().map(|&(i, w)| w * data[i]).sum();
        (inside + self.outside_weight * image.fill()) / self.denominator
    }
}

/// Entries are (row, col, weight) and may fall outside the frame.
type Weighted = (Vec<(i64, i64, f64)>, f64);

fn rectangle_weights(
    g: &ImageGeometry,
    area: &DetectionArea,
    length: f64,
    width: f64,
    angle: f64,
    ss: u32,
) -> Weighted {
    let (sin, cos) = angle.to_radians().sin_cos();
    let (hl, hw) = (length / 2.0, width / 2.0);
    let ex = (hl * cos).abs() + (hw * sin).abs();
    let ey = (hl * sin).abs() + (hw * cos).abs();
    let (oc_row, oc_col) = g.optical_center;
    let (px, py) = (g.mm_per_pixel_x, g.mm_per_pixel_y);
    let c0 = (oc_col + (area.center_x - ex) / px).floor() as i64 - 1;
    let c1 = (oc_col + (area.center_x + ex) / px).ceil() as i64 + 1;
    let r0 = (oc_row + (area.center_y - ey) / py).floor() as i64 - 1;
    let r1 = (oc_row + (area.center_y + ey) / py).ceil() as i64 + 1;
    let offsets: Vec<f64> = (0..ss)
        .map(|k| (2 * k as i64 + 1 - ss as i64) as f64 / (2 * ss) as f64)
        .collect();
    let per_sample = 1.0 / (ss as f64 * ss as f64);

    let mut entries = Vec::new();
    let mut total = 0.0;
    for r in r0..=r1 {
        let yc = r as f64 - oc_row;
        for c in c0..=c1 {
            let xc = c as f64 - oc_col;
            let mut hits = 0u32;
            for oy in &offsets {
                let ry = (yc + oy) * py - area.center_y;
                for ox in &offsets {
                    let rx = (xc + ox) * px - area.center_x;
                    // y points down, so "rising toward +x" is direction (cos, -sin).
                    let along = rx * cos - ry * sin;
                    let across = rx * sin + ry * cos;
                    if along.abs() <= hl && across.abs() <= hw {
                        hits += 1;
                    }
                }
            }
            if hits > 0 {
                let w = hits as f64 * per_sample;
                total += w;
                entries.push((r, c, w));
            }
        }
    }
    if entries.is_empty() {
        // Thinner than the coverage grid: the pixel under the centre stands in.
        let r = (oc_row + area.center_y / py).round() as i64;
        let c = (oc_col + area.center_x / px).round() as i64;
        entries.push((r, c, 1.0));
        total = 1.0;
    }
    (entries, total)
}

/// Indices along one axis whose pixel centres lie within `half` of `center`
/// (both in pixels relative to the optical centre).
fn window_axis(oc: f64, center: f64, half: f64) -> Vec<i64> {
    let lo = (oc + center - half).floor() as i64 - 1;
    let hi = (oc + center + half).ceil() as i64 + 1;
    let picked: Vec<i64> = (lo..=hi)
        .filter(|&i| ((i as f64 - oc) - center).abs() <= half)
        .collect();
    if !picked.is_empty() {
        return picked;
    }
    let best = (lo..=hi)
        .map(|i| ((i as f64 - oc) - center).abs())
        .fold(f64::INFINITY, f64::min);
    (lo..=hi)
        .filter(|&i| ((i as f64 - oc) - center).abs() == best)
        .collect()
}

fn gaussian_weights(g: &ImageGeometry, area: &DetectionArea, diameter: f64) -> Weighted {
    let (oc_row, oc_col) = g.optical_center;
    let (px, py) = (g.mm_per_pixel_x, g.mm_per_pixel_y);
    let ux = area.center_x / px;
    let uy = area.center_y / py;
    let cols = window_axis(oc_col, ux, diameter / (2.0 * px));
    let rows = window_axis(oc_row, uy, diameter / (2.0 * py));
    let sx = cols.len() as f64 / 2.0;
    let sy = rows.len() as f64 / 2.0;
    let mut entries = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        let dy = (r as f64 - oc_row) - uy;
        for &c in &cols {
            let dx = (c as f64 - oc_col) - ux;
            entries.push((r, c, gaussian(dx, dy, sx, sy)));
        }
    }
    (entries, (rows.len() * cols.len()) as f64)
}

/// Raw output of one sensor on one image (window binning).
pub fn compute_sensor_output(image: &EyeImage, area: &DetectionArea) -> Result<f64> {
    compute_sensor_output_with(image, area, DEFAULT_COVERAGE_SUPERSAMPLING)
}

pub fn compute_sensor_output_with(
    image: &EyeImage,
    area: &DetectionArea,
    supersampling: u32,
) -> Result<f64> {
    Ok(Footprint::build(image.geometry(), area, supersampling)?.apply(image))
}

/// Electrical parameters of a photodiode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotodiodeConfig {
    /// A/W at the working wavelength.
    pub responsivity: f64,
    /// A.
    pub reverse_saturation_current: f64,
    /// V; zero is photovoltaic mode.
    pub bias_voltage: f64,
    /// K.
    pub temperature: f64,
    /// Additive output noise, A.
    pub noise_stddev: f64,
}

impl Default for PhotodiodeConfig {
    fn default() -> Self {
        Self {
            responsivity: 0.5,
            reverse_saturation_current: 1e-9,
            bias_voltage: 0.0,
            temperature: 300.0,
            noise_stddev: 0.0,
        }
    }
}

impl PhotodiodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity > 0.0) {
            return Err(Error::config("photodiode.responsivity", "must be > 0"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::config("photodiode.temperature", "must be > 0"));
        }
        if !(self.noise_stddev >= 0.0) {
            return Err(Error::config("photodiode.noise_stddev", "must be >= 0"));
        }
        if !(self.reverse_saturation_current >= 0.0) {
            return Err(Error::config(
                "photodiode.reverse_saturation_current",
                "must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Photocurrent minus diode current: `R·P − I_s·(exp(qV/kT) − 1)`.
pub fn photodiode_current(config: &PhotodiodeConfig, incident_power: f64) -> f64 {
    let photo = config.responsivity * incident_power;
    if config.bias_voltage == 0.0 {
        return photo;
    }
    let thermal = BOLTZMANN * config.temperature / ELECTRON_CHARGE;
    let diode = config.reverse_saturation_current * (config.bias_voltage / thermal).exp_m1();
    photo - diode
}

/// Optional electrical stage applied to every raw sensor value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotodiodeStage {
    #[serde(flatten)]
    pub diode: PhotodiodeConfig,
    /// Incident power per unit of binned intensity, W.
    pub watts_per_unit: f64,
}

/// Post-binning signal chain: optional photodiode conversion, then additive
/// Gaussian noise. Defaults to the identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalChain {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photodiode: Option<PhotodiodeStage>,
    /// Noise on the binned (or photodiode) output.
    pub noise_stddev: f64,
}

impl SignalChain {
    pub fn validate(&self) -> Result<()> {
        if let Some(stage) = &self.photodiode {
            stage.diode.validate()?;
            if !(stage.watts_per_unit > 0.0) {
                return Err(Error::config("photodiode.watts_per_unit", "must be > 0"));
            }
        }
        if !(self.noise_stddev >= 0.0 && self.noise_stddev.is_finite()) {
            return Err(Error::config(
                "sensing.noise_stddev",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    pub fn is_noisy(&self) -> bool {
        self.total_noise() > 0.0
    }

    fn total_noise(&self) -> f64 {
        let diode = self
            .photodiode
            .as_ref()
            .map_or(0.0, |s| s.diode.noise_stddev);
        (self.noise_stddev * self.noise_stddev + diode * diode).sqrt()
    }

    /// Deterministic part of the chain.
    pub fn convert(&self, binned: f64) -> f64 {
        match &self.photodiode {
            Some(stage) => photodiode_current(&stage.diode, binned * stage.watts_per_unit),
            None => binned,
        }
    }

    pub fn apply<R: Rng + ?Sized>(&self, binned: f64, rng: &mut R) -> f64 {
        let clean = self.convert(binned);
        let sigma = self.total_noise();
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            clean + normal.sample(rng)
        } else {
            clean
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometry(rows: usize, cols: usize) -> ImageGeometry {
        ImageGeometry {
            rows,
            cols,
            mm_per_pixel_x: 1.0,
            mm_per_pixel_y: 1.0,
            optical_center: ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0),
        }
    }

    fn image(rows: usize, cols: usize, values: Vec<f64>) -> EyeImage {
        EyeImage::new(geometry(rows, cols), values, 0.0).unwrap()
    }

    #[test]
    fn single_pixel_gaussian_is_one() {
        let g = gaussian_window_weights(1, 1);
        assert_eq!(g.weights, vec![1.0]);
    }

    #[test]
    fn three_by_three_corner_weight() {
        let g = gaussian_window_weights(3, 3);
        assert_eq!(g.get(1, 1), 1.0);
        let sigma: f64 = 1.5;
        let expected = (-(1.0 / (2.0 * sigma * sigma)) * 2.0).exp();
        assert!((g.get(0, 0) - expected).abs() < 1e-15);
        assert!((g.get(0, 0) - 0.6412).abs() < 1e-4);
    }

    #[test]
    fn gaussian_weights_are_flip_symmetric() {
        let g = gaussian_window_weights(5, 8);
        for r in 0..5 {
            for c in 0..8 {
                assert_eq!(g.get(r, c), g.get(4 - r, c));
                assert_eq!(g.get(r, c), g.get(r, 7 - c));
            }
        }
    }

    #[test]
    fn constant_field_mean() {
        let img = image(3, 3, vec![0.5; 9]);
        let area = DetectionArea::rectangle(0.0, 0.0, 3.0, 3.0, 0.0);
        let v = compute_sensor_output(&img, &area).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_direct_average() {
        let img = image(2, 2, vec![0.1, 0.2, 0.3, 0.4]);
        let area = DetectionArea::rectangle(0.0, 0.0, 2.0, 2.0, 0.0);
        let v = compute_sensor_output(&img, &area).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gaussian_on_unit_field_is_mean_weight() {
        let img = image(9, 9, vec![1.0; 81]);
        let area = DetectionArea::circle(0.0, 0.0, 5.0);
        let v = compute_sensor_output(&img, &area).unwrap();
        let grid = gaussian_window_weights(5, 5);
        let brute = grid.weights.iter().sum::<f64>() / 25.0;
        assert!((v - brute).abs() < 1e-14);
        assert!(v < 1.0);
    }

    #[test]
    fn out_of_frame_pixels_see_fill() {
        let img = EyeImage::new(geometry(2, 2), vec![0.0; 4], 0.6).unwrap();
        // 4×2 window: half the pixels outside the frame.
        let area = DetectionArea::rectangle(1.0, 0.0, 4.0, 2.0, 0.0);
        let v = compute_sensor_output(&img, &area).unwrap();
        assert!((v - 0.3).abs() < 1e-12, "{v}");
    }

    #[test]
    fn far_away_area_is_geometry_error() {
        let img = image(4, 4, vec![0.0; 16]);
        let area = DetectionArea::circle(100.0, 0.0, 2.0);
        assert!(matches!(
            compute_sensor_output(&img, &area),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn photovoltaic_mode_is_linear() {
        let cfg = PhotodiodeConfig::default();
        assert_eq!(photodiode_current(&cfg, 2e-6), 0.5 * 2e-6);
        assert_eq!(
            photodiode_current(&cfg, 4e-6),
            2.0 * photodiode_current(&cfg, 2e-6)
        );
    }

    #[test]
    fn biased_diode_current() {
        let thermal = 0.026;
        let cfg = PhotodiodeConfig {
            responsivity: 0.5,
            reverse_saturation_current: 1e-9,
            bias_voltage: thermal * 2f64.ln(),
            temperature: thermal * ELECTRON_CHARGE / BOLTZMANN,
            noise_stddev: 0.0,
        };
        let i = photodiode_current(&cfg, 0.0);
        assert!((i + 1e-9).abs() < 1e-21, "{i}");
    }

    #[test]
    fn identity_chain_passes_values() {
        let chain = SignalChain::default();
        let mut rng = rand::rng();
        assert_eq!(chain.apply(0.37, &mut rng), 0.37);
    }
}
