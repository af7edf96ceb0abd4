//! Post-calibration sensor-shift scans.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{apply_calibration, CalibrationModel};
use crate::designs::PsogDesign;
use crate::error::{Error, Result};
use crate::eye_render::EyeState;
use crate::metrics::{mae_between_curves, Curve};
use crate::scene::{require_unshifted, Scene, StateKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl Axis {
    fn letter(self) -> char {
        match self {
            Axis::Horizontal => 'H',
            Axis::Vertical => 'V',
        }
    }
}

/// Eye-movement axis and sensor-shift axis, labelled eye-shift ("V-H").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Combination {
    pub eye: Axis,
    pub shift: Axis,
}

impl Combination {
    pub const ALL: [Combination; 4] = [
        Combination {
            eye: Axis::Horizontal,
            shift: Axis::Horizontal,
        },
        Combination {
            eye: Axis::Vertical,
            shift: Axis::Horizontal,
        },
        Combination {
            eye: Axis::Horizontal,
            shift: Axis::Vertical,
        },
        Combination {
            eye: Axis::Vertical,
            shift: Axis::Vertical,
        },
    ];

    pub fn parse(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.to_string() == label)
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.eye.letter(), self.shift.letter())
    }
}

impl Serialize for Combination {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Combination {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        Self::parse(&label).ok_or_else(|| {
            serde::de::Error::custom(format!(
                "unknown combination '{label}', expected H-H, V-H, H-V or V-V"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftExperimentConfig {
    pub combinations: Vec<Combination>,
    /// Sensor shifts, mm; must contain 0.
    pub shifts: Vec<f64>,
    /// Eye positions along the driven axis, degrees.
    pub positions: Vec<f64>,
    pub pupil_diameter: f64,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

impl Default for ShiftExperimentConfig {
    fn default() -> Self {
        Self {
            combinations: Combination::ALL.to_vec(),
            shifts: grid(-2.0, 2.0, 0.5),
            positions: grid(-10.0, 10.0, 0.5),
            pupil_diameter: 4.0,
        }
    }
}

impl ShiftExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.combinations.is_empty() {
            return Err(Error::config("shift.combinations", "must not be empty"));
        }
        if !self.shifts.contains(&0.0) {
            return Err(Error::config(
                "shift.shifts",
                "must contain 0 (the baseline curve)",
            ));
        }
        if self.shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("shift.shifts", "must be finite"));
        }
        if self.positions.is_empty() || self.positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::config(
                "shift.positions",
                "must be a non-empty list of finite angles",
            ));
        }
        if !(self.pupil_diameter > 0.0) {
            return Err(Error::config("shift.pupil_diameter", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftCurve {
    pub shift: f64,
    pub curve: Curve,
    /// MAE against the zero-shift curve, degrees.
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftCurveCluster {
    pub combination: Combination,
    pub curves: Vec<ShiftCurve>,
}

impl ShiftCurveCluster {
    pub fn baseline(&self) -> &ShiftCurve {
        self.curves
            .iter()
            .find(|c| c.shift == 0.0)
            .expect("baseline present")
    }

    pub fn at(&self, shift: f64) -> Option<&ShiftCurve> {
        self.curves.iter().find(|c| c.shift == shift)
    }
}

fn estimate_curve(
    design: &PsogDesign,
    scene: &Scene,
    calibration: &CalibrationModel,
    combo: Combination,
    shift: f64,
    config: &ShiftExperimentConfig,
) -> Result<Curve> {
    let (sx, sy) = match combo.shift {
        Axis::Horizontal => (shift, 0.0),
        Axis::Vertical => (0.0, shift),
    };
    let shifted = scene.shifted(sx, sy)?;
    let compiled = shifted.compile(design)?;
    let states: Vec<EyeState> = config
        .positions
        .iter()
        .map(|&p| match combo.eye {
            Axis::Horizontal => EyeState::new(p, 0.0, config.pupil_diameter),
            Axis::Vertical => EyeState::new(0.0, p, config.pupil_diameter),
        })
        .collect();
    let keys: Vec<StateKey> = states.iter().map(StateKey::from_state).collect();
    shifted.prefetch(&keys)?;
    let values = states
        .iter()
        .map(|s| {
            let img = shifted.render(s)?;
            let (h_raw, v_raw) = compiled.raw_output(&img, &shifted.chain);
            let (h, v) = apply_calibration(calibration, h_raw, v_raw);
            Ok(match combo.eye {
                Axis::Horizontal => h,
                Axis::Vertical => v,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Curve {
        positions: config.positions.clone(),
        values,
    })
}

/// Curve clusters for every configured combination.
///
/// `scene` must be unshifted; `calibration` is the zero-shift fit of `design`.
/// Work units (combination, shift) run in parallel; output order follows the
/// configuration.
pub fn run_shift_experiment(
    design: &PsogDesign,
    calibration: &CalibrationModel,
    config: &ShiftExperimentConfig,
    scene: &Scene,
) -> Result<Vec<ShiftCurveCluster>> {
    config.validate()?;
    require_unshifted(scene)?;
    let units: Vec<(Combination, f64)> = config
        .combinations
        .iter()
        .flat_map(|&c| config.shifts.iter().map(move |&s| (c, s)))
        .collect();
    let curves: Vec<Curve> = units
        .par_iter()
        .map(|&(c, s)| estimate_curve(design, scene, calibration, c, s, config))
        .collect::<Result<_>>()?;
    let per = config.shifts.len();
    config
        .combinations
        .iter()
        .enumerate()
        .map(|(ci, &combination)| {
            let block = &curves[ci * per..(ci + 1) * per];
            let base_idx = config
                .shifts
                .iter()
                .position(|&s| s == 0.0)
                .expect("validated");
            let base = &block[base_idx];
            let curves = config
                .shifts
                .iter()
                .zip(block)
                .map(|(&shift, curve)| {
                    Ok(ShiftCurve {
                        shift,
                        mae: mae_between_curves(curve, base)?,
                        curve: curve.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ShiftCurveCluster {
                combination,
                curves,
            })
        })
        .collect()
}
