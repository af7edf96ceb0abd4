//! Experiment pipelines: scanpath, replay, sweeps, trade-off and shift scans.

pub mod pipeline;
pub mod scanpath;
pub mod shift;
pub mod sweep;
pub mod tradeoff;

pub use pipeline::{run_single, signal_keys, simulate_signal, unit_rng, SingleRun};
pub use scanpath::{generate_scanpath, ScanpathConfig};
pub use shift::{
    run_shift_experiment, Axis, Combination, ShiftCurve, ShiftCurveCluster, ShiftExperimentConfig,
};
pub use sweep::{
    full_specs, run_sweep, AxisSpec, CellMetrics, SweepCell, SweepContext, SweepGrid, SweepResult,
};
pub use tradeoff::{
    default_pairs, tradeoff_optimize, tradeoff_surfaces, TradeoffOutcome, METRIC_RESOLUTION,
};
