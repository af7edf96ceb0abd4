//! Cartesian parameter sweeps over one design.

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationModel, CalibrationProtocol};
use crate::designs::{
    build_design_with, check_param_range, DesignAnchors, DesignName, DesignParams, ANGLE_RANGE,
    POSITION_RANGE, SIZE_RANGE,
};
use crate::error::{Error, Result};
use crate::eye_render::PupilDilation;
use crate::metrics::{GazeSignal, MetricKind, MetricReport};
use crate::scene::{Scene, StateKey};

use super::pipeline::{run_single, signal_keys, unit_rng};

/// Values of one sweep axis: an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl AxisSpec {
    pub fn values(&self, key: &str) -> Result<Vec<f64>> {
        match *self {
            AxisSpec::List(ref v) => Ok(v.clone()),
            AxisSpec::Range { start, stop, step } => {
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
                    return Err(Error::config(
                        key,
                        "range needs finite start <= stop and step > 0",
                    ));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                // Round to 1e-9 so 0.1-style steps land on their decimal values.
                Ok((0..n)
                    .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
                    .collect())
            }
        }
    }
}

/// Axis specs covering the whole parameter range of `design`, keyed by name.
pub fn full_specs(design: DesignName) -> BTreeMap<String, AxisSpec> {
    let range = |(start, stop): (f64, f64), step: f64| AxisSpec::Range { start, stop, step };
    design
        .parameter_names()
        .iter()
        .map(|n| {
            let spec = match *n {
                "angle" => range(ANGLE_RANGE, 5.0),
                "pos_x" | "pos_y" => range(POSITION_RANGE, 0.5),
                _ => range(SIZE_RANGE, 0.5),
            };
            (n.to_string(), spec)
        })
        .collect()
}

/// Cartesian grid over the parameters of one design.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub design: DesignName,
    /// One axis per parameter, in [`DesignName::parameter_names`] order.
    pub axes: Vec<Vec<f64>>,
}

impl SweepGrid {
    /// Grid from named axes; parameters without an axis are held at `fixed`.
    pub fn from_specs(
        design: DesignName,
        specs: &BTreeMap<String, AxisSpec>,
        fixed: &DesignParams,
    ) -> Result<Self> {
        let names = design.parameter_names();
        if let Some(unknown) = specs.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::config(
                format!("design.sweep.{unknown}"),
                format!(
                    "{design} has no parameter '{unknown}' (expected one of {})",
                    names.join(", ")
                ),
            ));
        }
        let fixed_values = fixed.values();
        let axes = names
            .iter()
            .zip(fixed_values)
            .map(|(name, v)| match specs.get(*name) {
                Some(spec) => spec.values(&format!("design.sweep.{name}")),
                None => Ok(vec![v]),
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = Self { design, axes };
        grid.validate()?;
        Ok(grid)
    }

    /// Every parameter over its full range (0.5 mm, 5° and 0.5 mm steps).
    pub fn full_grid(design: DesignName) -> Self {
        let specs = full_specs(design);
        let axes = design
            .parameter_names()
            .iter()
            .map(|n| specs[*n].values("").expect("static range"))
            .collect();
        Self { design, axes }
    }

    pub fn validate(&self) -> Result<()> {
        let names = self.design.parameter_names();
        if self.axes.len() != names.len() {
            return Err(Error::config(
                "design.sweep",
                format!(
                    "{} needs {} axes, got {}",
                    self.design,
                    names.len(),
                    self.axes.len()
                ),
            ));
        }
        for (name, axis) in names.iter().zip(&self.axes) {
            if axis.is_empty() {
                return Err(Error::config(
                    format!("design.sweep.{name}"),
                    "axis is empty",
                ));
            }
            for &v in axis {
                check_param_range(name, v).map_err(|e| match e {
                    Error::Config { message, .. } => {
                        Error::config(format!("design.sweep.{name}"), message)
                    }
                    other => other,
                })?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter tuple of cell `index`; the last axis varies fastest.
    pub fn cell(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            *slot = axis[rem % axis.len()];
            rem /= axis.len();
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub index: usize,
    pub params: Vec<f64>,
    pub outcome: std::result::Result<CellMetrics, String>,
}

/// What a sweep keeps per cell.
#[derive(Debug, Clone)]
pub struct CellMetrics {
    pub report: MetricReport,
    pub calibration: CalibrationModel,
}

impl SweepCell {
    /// Mean of `kind`, NaN for failed cells.
    pub fn mean(&self, kind: MetricKind) -> f64 {
        self.outcome
            .as_ref()
            .map_or(f64::NAN, |m| m.report.mean(kind))
    }

    pub fn summary(&self) -> [f64; 8] {
        self.outcome
            .as_ref()
            .map_or([f64::NAN; 8], |m| m.report.summary())
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn parameter_names(&self) -> &'static [&'static str] {
        self.grid.design.parameter_names()
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }
}

/// Inputs shared by every cell of a sweep.
pub struct SweepContext<'a> {
    pub scene: &'a Scene,
    pub gt: &'a GazeSignal,
    pub dilation: &'a PupilDilation,
    pub protocol: &'a CalibrationProtocol,
    pub anchors: &'a DesignAnchors,
    pub seed: u64,
}

impl SweepContext<'_> {
    /// Renders every frame the sweep will need, in parallel.
    pub fn prefetch(&self) -> Result<()> {
        let mut keys = signal_keys(self.gt, self.dilation);
        keys.extend(self.protocol.states().iter().map(StateKey::from_state));
        self.scene.prefetch(&keys)
    }

    /// Runs cell `index` exactly as the full sweep would.
    pub fn run_cell(&self, grid: &SweepGrid, index: usize) -> SweepCell {
        let params = grid.cell(index);
        let outcome = self
            .cell_metrics(grid.design, &params, index)
            .map_err(|e| e.to_string());
        SweepCell {
            index,
            params,
            outcome,
        }
    }

    fn cell_metrics(&self, name: DesignName, params: &[f64], index: usize) -> Result<CellMetrics> {
        let params = DesignParams::from_values(name, params)?;
        let design = build_design_with(name, &params, self.anchors)?;
        let mut rng = unit_rng(self.seed, index as u64);
        let run = run_single(
            &design,
            self.scene,
            self.gt,
            self.dilation,
            self.protocol,
            &mut rng,
        )?;
        Ok(CellMetrics {
            report: run.report,
            calibration: run.calibration,
        })
    }
}

/// Runs every cell of `grid` in parallel on the current rayon pool.
/// Results are ordered by cell index regardless of scheduling.
pub fn run_sweep(grid: &SweepGrid, ctx: &SweepContext<'_>) -> Result<SweepResult> {
    grid.validate()?;
    if grid.is_empty() {
        return Err(Error::Contract("sweep grid is empty".into()));
    }
    ctx.prefetch()?;
    info!("sweeping {} cells of {}", grid.len(), grid.design);
    let cells: Vec<SweepCell> = (0..grid.len())
        .into_par_iter()
        .map(|i| ctx.run_cell(grid, i))
        .collect();
    Ok(SweepResult {
        grid: grid.clone(),
        cells,
    })
}
