//! Per-axis quadratic calibration from raw de-matrixed output to degrees.

use serde::{Deserialize, Serialize};

use crate::designs::PsogDesign;
use crate::error::{Error, Result};
use crate::eye_render::EyeState;
use crate::scene::{require_unshifted, Scene};

/// Quadratic map `deg = a·raw² + b·raw + c` for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// RMS error at the fit points, degrees.
    pub residual: f64,
}

impl AxisFit {
    pub const IDENTITY: AxisFit = AxisFit {
        a: 0.0,
        b: 1.0,
        c: 0.0,
        residual: 0.0,
    };

    pub fn eval(&self, raw: f64) -> f64 {
        (self.a * raw + self.b) * raw + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub horizontal: AxisFit,
    pub vertical: AxisFit,
}

impl CalibrationModel {
    pub fn new(horizontal: AxisFit, vertical: AxisFit) -> Self {
        Self {
            horizontal,
            vertical,
        }
    }
}

/// Least-squares quadratic through `(raw, degrees)` points.
///
/// Abscissae are centred and scaled to unit range before solving. Exactly
/// three points are interpolated by solving the square Vandermonde system;
/// more points go through the normal equations.
pub fn fit_axis(points: &[(f64, f64)], axis: &str) -> Result<AxisFit> {
    let fail = |message: String| Error::Fit {
        axis: axis.to_string(),
        message,
    };
    if points.len() < 3 {
        return Err(fail(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(fail("non-finite calibration point".into()));
    }
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let scale = points
        .iter()
        .map(|p| (p.0 - mean).abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(fail("all raw values identical".into()));
    }
    let rows: Vec<([f64; 3], f64)> = points
        .iter()
        .map(|&(x, y)| {
            let t = (x - mean) / scale;
            ([t * t, t, 1.0], y)
        })
        .collect();

    let (mut m, mut rhs) = ([[0.0; 3]; 3], [0.0; 3]);
    if rows.len() == 3 {
        for (i, (basis, y)) in rows.iter().enumerate() {
            m[i] = *basis;
            rhs[i] = *y;
        }
    } else {
        for (basis, y) in &rows {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += basis[i] * basis[j];
                }
                rhs[i] += basis[i] * y;
            }
        }
    }
    let [alpha, beta, gamma] = solve3(m, rhs)
        .ok_or_else(|| fail("rank-deficient system (need 3 distinct raw values)".into()))?;

    // Back to the raw abscissa.
    let s2 = scale * scale;
    let a = alpha / s2;
    let b = beta / scale - 2.0 * alpha * mean / s2;
    let c = alpha * mean * mean / s2 - beta * mean / scale + gamma;
    let mut fit = AxisFit {
        a,
        b,
        c,
        residual: 0.0,
    };
    let sq: f64 = points.iter().map(|&(x, y)| (fit.eval(x) - y).powi(2)).sum();
    fit.residual = (sq / n).sqrt();
    Ok(fit)
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    let norm = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm == 0.0 {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty");
        if m[pivot][col].abs() <= 1e-12 * norm {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Eye positions and pupil size used during calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationProtocol {
    /// Degrees, applied on each axis with the other axis at 0.
    pub positions: Vec<f64>,
    pub pupil_diameter: f64,
}

impl Default for CalibrationProtocol {
    fn default() -> Self {
        Self {
            positions: vec![-10.0, 0.0, 10.0],
            pupil_diameter: 4.0,
        }
    }
}

impl CalibrationProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.positions.len() < 3 {
            return Err(Error::config(
                "calibration.positions",
                "need at least 3 positions",
            ));
        }
        if !(self.pupil_diameter > 0.0) {
            return Err(Error::config("calibration.pupil_diameter", "must be > 0"));
        }
        Ok(())
    }

    pub fn states(&self) -> Vec<EyeState> {
        let p = self.pupil_diameter;
        self.positions
            .iter()
            .map(|&a| EyeState::new(a, 0.0, p))
            .chain(self.positions.iter().map(|&a| EyeState::new(0.0, a, p)))
            .collect()
    }
}

/// Raw outputs at the calibration poses, for records and re-fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPoints {
    pub horizontal: Vec<(f64, f64)>,
    pub vertical: Vec<(f64, f64)>,
}

impl CalibrationPoints {
    pub fn fit(&self) -> Result<CalibrationModel> {
        Ok(CalibrationModel::new(
            fit_axis(&self.horizontal, "horizontal")?,
            fit_axis(&self.vertical, "vertical")?,
        ))
    }
}

/// Collects calibration raw outputs by rotating the rendered eye.
pub fn calibration_points(
    design: &PsogDesign,
    scene: &Scene,
    protocol: &CalibrationProtocol,
) -> Result<CalibrationPoints> {
    require_unshifted(scene)?;
    protocol.validate()?;
    let compiled = scene.compile(design)?;
    let p = protocol.pupil_diameter;
    let mut horizontal = Vec::with_capacity(protocol.positions.len());
    let mut vertical = Vec::with_capacity(protocol.positions.len());
    for &angle in &protocol.positions {
        let img = scene.render(&EyeState::new(angle, 0.0, p))?;
        horizontal.push((compiled.raw_output(&img, &scene.chain).0, angle));
        let img = scene.render(&EyeState::new(0.0, angle, p))?;
        vertical.push((compiled.raw_output(&img, &scene.chain).1, angle));
    }
    Ok(CalibrationPoints {
        horizontal,
        vertical,
    })
}

/// Three-point (by default) calibration of `design` on `scene`.
pub fn calibrate_design(design: &PsogDesign, scene: &Scene) -> Result<CalibrationModel> {
    calibrate_design_with(design, scene, &CalibrationProtocol::default())
}

pub fn calibrate_design_with(
    design: &PsogDesign,
    scene: &Scene,
    protocol: &CalibrationProtocol,
) -> Result<CalibrationModel> {
    calibration_points(design, scene, protocol)?.fit()
}

/// Raw (h, v) to estimated (yaw, pitch) in degrees.
pub fn apply_calibration(model: &CalibrationModel, h_raw: f64, v_raw: f64) -> (f64, f64) {
    (model.horizontal.eval(h_raw), model.vertical.eval(v_raw))
}
