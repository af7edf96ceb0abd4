//! Detection-area layouts and de-matrixing rules of the four PSOG designs.
//!
//! * D1: two horizontal rectangles on the lateral limbus, two vertical ones on
//!   the upper/lower limbus; `h = PS1 − PS2`, `v = PS3 − PS4`.
//! * D2: two tilted rectangles mirrored about the vertical axis;
//!   `h = PS1 − PS2`, `v = PS1 + PS2`.
//! * D3: four Gaussian circles, a lateral pair and a pair below the pupil;
//!   `h = PS1 − PS2`, `v = PS3 + PS4`.
//! * D4: a nine-element horizontal array and a nine-element vertical array;
//!   `h = (PS1 + PS2) − (PS8 + PS9)`, `v = (PS2 + PS3) − (PS7 + PS8)`.
//!
//! PS1 is always on the nasal (−x) or upper (−y) side.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eye_render::EyeModelConfig;
use crate::sensing::DetectionArea;

/// Sweep bounds for sizes, mm.
pub const SIZE_RANGE: (f64, f64) = (0.5, 12.0);
/// Sweep bounds for the D2 tilt, degrees.
pub const ANGLE_RANGE: (f64, f64) = (5.0, 45.0);
/// Sweep bounds for the D4 array positions, mm.
pub const POSITION_RANGE: (f64, f64) = (-2.0, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DesignName {
    D1,
    D2,
    D3,
    D4,
}

impl DesignName {
    pub const ALL: [DesignName; 4] = [
        DesignName::D1,
        DesignName::D2,
        DesignName::D3,
        DesignName::D4,
    ];

    /// Parameter names in sweep (lexicographic) order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            DesignName::D1 => &["length", "width"],
            DesignName::D2 => &["length", "width", "angle"],
            DesignName::D3 => &["diameter"],
            DesignName::D4 => &["diameter", "pos_y", "pos_x"],
        }
    }

    /// Whether horizontal and vertical outputs come from disjoint sensor groups.
    pub fn has_separate_channels(self) -> bool {
        self != DesignName::D2
    }
}

impl fmt::Display for DesignName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DesignName::D1 => "D1",
            DesignName::D2 => "D2",
            DesignName::D3 => "D3",
            DesignName::D4 => "D4",
        };
        f.write_str(s)
    }
}

impl FromStr for DesignName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D1" | "d1" => Ok(DesignName::D1),
            "D2" | "d2" => Ok(DesignName::D2),
            "D3" | "d3" => Ok(DesignName::D3),
            "D4" | "d4" => Ok(DesignName::D4),
            other => Err(Error::config(
                "design.name",
                format!("unknown design `{other}`"),
            )),
        }
    }
}

/// Sweep parameters of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignParams {
    D1 {
        length: f64,
        width: f64,
    },
    D2 {
        length: f64,
        width: f64,
        angle: f64,
    },
    D3 {
        diameter: f64,
    },
    D4 {
        diameter: f64,
        pos_y: f64,
        pos_x: f64,
    },
}

impl DesignParams {
    pub fn name(&self) -> DesignName {
        match self {
            DesignParams::D1 { .. } => DesignName::D1,
            DesignParams::D2 { .. } => DesignName::D2,
            DesignParams::D3 { .. } => DesignName::D3,
            DesignParams::D4 { .. } => DesignName::D4,
        }
    }

    /// Values in the order of [`DesignName::parameter_names`].
    pub fn values(&self) -> Vec<f64> {
        match *self {
            DesignParams::D1 { length, width } => vec![length, width],
            DesignParams::D2 {
                length,
                width,
                angle,
            } => vec![length, width, angle],
            DesignParams::D3 { diameter } => vec![diameter],
            DesignParams::D4 {
                diameter,
                pos_y,
                pos_x,
            } => vec![diameter, pos_y, pos_x],
        }
    }

    pub fn from_values(name: DesignName, values: &[f64]) -> Result<Self> {
        let expected = name.parameter_names().len();
        if values.len() != expected {
            return Err(Error::config(
                "design.params",
                format!("{name} takes {expected} parameters, got {}", values.len()),
            ));
        }
        Ok(match name {
            DesignName::D1 => DesignParams::D1 {
                length: values[0],
                width: values[1],
            },
            DesignName::D2 => DesignParams::D2 {
                length: values[0],
                width: values[1],
                angle: values[2],
            },
            DesignName::D3 => DesignParams::D3 {
                diameter: values[0],
            },
            DesignName::D4 => DesignParams::D4 {
                diameter: values[0],
                pos_y: values[1],
                pos_x: values[2],
            },
        })
    }

    /// Representative defaults used when a config names a design without parameters.
    pub fn default_for(name: DesignName) -> Self {
        match name {
            DesignName::D1 => DesignParams::D1 {
                length: 5.0,
                width: 9.0,
            },
            DesignName::D2 => DesignParams::D2 {
                length: 5.0,
                width: 11.0,
                angle: 15.0,
            },
            DesignName::D3 => DesignParams::D3 { diameter: 11.5 },
            // Wider circles push the outer array elements past the limbus,
            // where the uniform sclera gives a constant reading.
            DesignName::D4 => DesignParams::D4 {
                diameter: 2.5,
                pos_y: 2.0,
                pos_x: -1.5,
            },
        }
    }

    /// Vertical-channel counterpart of [`DesignParams::default_for`]; D2 shares
    /// one set for both channels.
    pub fn default_vertical_for(name: DesignName) -> Self {
        match name {
            DesignName::D1 => DesignParams::D1 {
                length: 6.5,
                width: 11.0,
            },
            DesignName::D2 => Self::default_for(name),
            DesignName::D3 => DesignParams::D3 { diameter: 6.5 },
            DesignName::D4 => DesignParams::D4 {
                diameter: 3.0,
                pos_y: 2.0,
                pos_x: -1.5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let names = self.name().parameter_names();
        for (key, value) in names.iter().zip(self.values()) {
            check_param_range(key, value)?;
        }
        Ok(())
    }
}

/// Range check for a single named parameter.
pub fn check_param_range(key: &str, value: f64) -> Result<()> {
    let (lo, hi, unit) = match key {
        "angle" => (ANGLE_RANGE.0, ANGLE_RANGE.1, "°"),
        "pos_x" | "pos_y" => (POSITION_RANGE.0, POSITION_RANGE.1, " mm"),
        _ => (SIZE_RANGE.0, SIZE_RANGE.1, " mm"),
    };
    if !(lo..=hi).contains(&value) {
        return Err(Error::config(
            key,
            format!("{value} outside [{lo}, {hi}]{unit}"),
        ));
    }
    Ok(())
}

/// Nominal placements of every design's detection areas, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignAnchors {
    pub d1_horizontal_x: f64,
    pub d1_vertical_y: f64,
    /// Historical variant: `v = PS3 + PS4` instead of `PS3 − PS4`.
    pub d1_vertical_sum: bool,
    pub d2_center_x: f64,
    pub d3_horizontal_x: f64,
    pub d3_vertical_x: f64,
    pub d3_vertical_y: f64,
    /// Adjacent D4 array centres are `spacing_ratio · D` apart.
    pub d4_spacing_ratio: f64,
}

impl DesignAnchors {
    pub fn for_model(model: &EyeModelConfig) -> Self {
        let ri = model.iris_radius();
        Self {
            d1_horizontal_x: ri,
            d1_vertical_y: ri,
            d1_vertical_sum: false,
            d2_center_x: 4.0,
            d3_horizontal_x: ri,
            d3_vertical_x: 0.5 * ri,
            d3_vertical_y: 0.7 * ri,
            d4_spacing_ratio: 0.75,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d4_spacing_ratio > 0.0) {
            return Err(Error::config("anchors.d4_spacing_ratio", "must be > 0"));
        }
        for (key, v) in [
            ("anchors.d1_horizontal_x", self.d1_horizontal_x),
            ("anchors.d1_vertical_y", self.d1_vertical_y),
            ("anchors.d2_center_x", self.d2_center_x),
            ("anchors.d3_horizontal_x", self.d3_horizontal_x),
            ("anchors.d3_vertical_x", self.d3_vertical_x),
            ("anchors.d3_vertical_y", self.d3_vertical_y),
        ] {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        Ok(())
    }
}

/// A set of detection areas plus their horizontal/vertical combination rules.
#[derive(Debug, Clone, PartialEq)]
pub struct PsogDesign {
    pub name: DesignName,
    pub areas: Vec<DetectionArea>,
    pub h_coeffs: Vec<i8>,
    pub v_coeffs: Vec<i8>,
}

const D4_H: [i8; 9] = [1, 1, 0, 0, 0, 0, 0, -1, -1];
const D4_V: [i8; 9] = [0, 1, 1, 0, 0, 0, -1, -1, 0];

/// Builds a design with the default anchors for `model`.
pub fn build_design(
    name: DesignName,
    params: &DesignParams,
    model: &EyeModelConfig,
) -> Result<PsogDesign> {
    build_design_with(name, params, &DesignAnchors::for_model(model))
}

pub fn build_design_with(
    name: DesignName,
    params: &DesignParams,
    anchors: &DesignAnchors,
) -> Result<PsogDesign> {
    if params.name() != name {
        return Err(Error::config(
            "design.params",
            format!("{} parameters given for design {name}", params.name()),
        ));
    }
    params.validate()?;
    anchors.validate()?;
    let design = match *params {
        DesignParams::D1 { length, width } => {
            let hx = anchors.d1_horizontal_x;
            let vy = anchors.d1_vertical_y;
            PsogDesign {
                name,
                areas: vec![
                    DetectionArea::rectangle(-hx, 0.0, length, width, 0.0),
                    DetectionArea::rectangle(hx, 0.0, length, width, 0.0),
                    DetectionArea::rectangle(0.0, -vy, length, width, 90.0),
                    DetectionArea::rectangle(0.0, vy, length, width, 90.0),
                ],
                h_coeffs: vec![1, -1, 0, 0],
                v_coeffs: if anchors.d1_vertical_sum {
                    vec![0, 0, 1, 1]
                } else {
                    vec![0, 0, 1, -1]
                },
            }
        }
        DesignParams::D2 {
            length,
            width,
            angle,
        } => {
            let cx = anchors.d2_center_x;
            PsogDesign {
                name,
                areas: vec![
                    DetectionArea::rectangle(-cx, 0.0, length, width, angle),
                    DetectionArea::rectangle(cx, 0.0, length, width, -angle),
                ],
                h_coeffs: vec![1, -1],
                v_coeffs: vec![1, 1],
            }
        }
        DesignParams::D3 { diameter } => {
            let hx = anchors.d3_horizontal_x;
            let (vx, vy) = (anchors.d3_vertical_x, anchors.d3_vertical_y);
            PsogDesign {
                name,
                areas: vec![
                    DetectionArea::circle(-hx, 0.0, diameter),
                    DetectionArea::circle(hx, 0.0, diameter),
                    DetectionArea::circle(-vx, vy, diameter),
                    DetectionArea::circle(vx, vy, diameter),
                ],
                h_coeffs: vec![1, -1, 0, 0],
                v_coeffs: vec![0, 0, 1, 1],
            }
        }
        DesignParams::D4 {
            diameter,
            pos_y,
            pos_x,
        } => {
            let spacing = anchors.d4_spacing_ratio * diameter;
            let offsets = (0..9).map(|k| (k as f64 - 4.0) * spacing);
            // pos_y is positive upward; the image frame points down.
            let mut areas: Vec<DetectionArea> = offsets
                .clone()
                .map(|x| DetectionArea::circle(x, -pos_y, diameter))
                .collect();
            areas.extend(offsets.map(|y| DetectionArea::circle(pos_x, y, diameter)));
            let mut h_coeffs = D4_H.to_vec();
            h_coeffs.extend([0; 9]);
            let mut v_coeffs = vec![0; 9];
            v_coeffs.extend(D4_V);
            PsogDesign {
                name,
                areas,
                h_coeffs,
                v_coeffs,
            }
        }
    };
    design.check_structure(anchors.d1_vertical_sum)?;
    Ok(design)
}

impl PsogDesign {
    /// Indices of the sensors feeding the horizontal channel group.
    pub fn horizontal_group(&self) -> Range<usize> {
        match self.name {
            DesignName::D1 | DesignName::D3 => 0..2,
            DesignName::D2 => 0..2,
            DesignName::D4 => 0..9,
        }
    }

    pub fn vertical_group(&self) -> Range<usize> {
        match self.name {
            DesignName::D1 | DesignName::D3 => 2..4,
            DesignName::D2 => 0..2,
            DesignName::D4 => 9..18,
        }
    }

    /// Horizontal sensors from `horizontal`, vertical sensors from `vertical`.
    ///
    /// Lets D1/D3/D4 use the separate trade-off parameters found for each
    /// channel pair. D2 shares its sensors, so `horizontal` is returned as is.
    pub fn compose(horizontal: &PsogDesign, vertical: &PsogDesign) -> Result<PsogDesign> {
        if horizontal.name != vertical.name {
            return Err(Error::Contract(format!(
                "cannot compose {} with {}",
                horizontal.name, vertical.name
            )));
        }
        if !horizontal.name.has_separate_channels() {
            return Ok(horizontal.clone());
        }
        let mut out = horizontal.clone();
        for i in out.vertical_group() {
            out.areas[i] = vertical.areas[i];
        }
        out.v_coeffs = vertical.v_coeffs.clone();
        Ok(out)
    }

    fn check_structure(&self, d1_vertical_sum: bool) -> Result<()> {
        let n = self.areas.len();
        let (h, v): (&[i8], Vec<i8>) = match self.name {
            DesignName::D1 => (
                &[1, -1, 0, 0],
                if d1_vertical_sum {
                    vec![0, 0, 1, 1]
                } else {
                    vec![0, 0, 1, -1]
                },
            ),
            DesignName::D2 => (&[1, -1], vec![1, 1]),
            DesignName::D3 => (&[1, -1, 0, 0], vec![0, 0, 1, 1]),
            DesignName::D4 => {
                let mut v = vec![0; 9];
                v.extend(D4_V);
                let ok = n == 18
                    && self.h_coeffs[..9] == D4_H
                    && self.h_coeffs[9..].iter().all(|&c| c == 0)
                    && self.v_coeffs == v;
                return if ok {
                    Ok(())
                } else {
                    Err(Error::Contract("D4 coefficient layout mismatch".into()))
                };
            }
        };
        if self.h_coeffs != h || self.v_coeffs != v || n != h.len() {
            return Err(Error::Contract(format!(
                "{} coefficient layout mismatch",
                self.name
            )));
        }
        Ok(())
    }
}

/// De-matrixed (horizontal, vertical) raw output.
pub fn design_raw_output(design: &PsogDesign, sensor_values: &[f64]) -> Result<(f64, f64)> {
    if sensor_values.len() != design.areas.len() {
        return Err(Error::Contract(format!(
            "{} expects {} sensor values, got {}",
            design.name,
            design.areas.len(),
            sensor_values.len()
        )));
    }
    let combine = |coeffs: &[i8]| -> f64 {
        coeffs
            .iter()
            .zip(sensor_values)
            .filter(|(c, _)| **c != 0)
            .map(|(&c, &v)| c as f64 * v)
            .sum()
    };
    Ok((combine(&design.h_coeffs), combine(&design.v_coeffs)))
}
