//! Executes a parsed [`RunConfig`] into a [`ResultsBundle`].

use log::info;

use crate::calibration::calibration_points;
use crate::error::Result;
use crate::experiments::{
    default_pairs, generate_scanpath, run_shift_experiment, run_single, run_sweep,
    tradeoff_optimize, unit_rng, SweepContext, SweepResult, TradeoffOutcome,
};
use crate::metrics::GazeSignal;
use crate::scene::Scene;

use super::config::{Mode, RunConfig};
use super::results::ResultsBundle;

struct Prepared {
    scene: Scene,
    gt: GazeSignal,
}

fn prepare(config: &RunConfig) -> Result<Prepared> {
    Ok(Prepared {
        scene: config.scene.build()?,
        gt: generate_scanpath(&config.scanpath)?,
    })
}

fn sweep(config: &RunConfig, p: &Prepared) -> Result<SweepResult> {
    let grid = config.sweep_grid()?;
    let anchors = config.anchors();
    let ctx = SweepContext {
        scene: &p.scene,
        gt: &p.gt,
        dilation: &config.scanpath.dilation,
        protocol: &config.calibration,
        anchors: &anchors,
        seed: config.output.seed,
    };
    let result = run_sweep(&grid, &ctx)?;
    if result.failures() > 0 {
        log::warn!(
            "{} of {} sweep cells failed",
            result.failures(),
            result.cells.len()
        );
    }
    Ok(result)
}

/// Sweep plus trade-off search with the design's default metric groups.
pub fn run_tradeoff(config: &RunConfig) -> Result<(SweepResult, Vec<TradeoffOutcome>)> {
    let p = prepare(config)?;
    let s = sweep(config, &p)?;
    let outcomes = tradeoff_optimize(&s, &default_pairs(config.design.name))?;
    Ok((s, outcomes))
}

/// Runs the configured experiment mode on the current rayon pool.
pub fn execute(config: &RunConfig) -> Result<ResultsBundle> {
    let mut bundle = ResultsBundle::new(config.clone());
    info!("running {} on {}", config.mode(), config.design.name);
    match config.mode() {
        Mode::Single => {
            let p = prepare(config)?;
            let design = config.design()?;
            let mut keys = crate::experiments::signal_keys(&p.gt, &config.scanpath.dilation);
            keys.extend(
                config
                    .calibration
                    .states()
                    .iter()
                    .map(crate::scene::StateKey::from_state),
            );
            p.scene.prefetch(&keys)?;
            let mut rng = unit_rng(config.output.seed, 0);
            let run = run_single(
                &design,
                &p.scene,
                &p.gt,
                &config.scanpath.dilation,
                &config.calibration,
                &mut rng,
            )?;
            bundle.add_single(&run, &p.gt)?;
        }
        Mode::Sweep => {
            let p = prepare(config)?;
            bundle.add_sweep(&sweep(config, &p)?);
        }
        Mode::Tradeoff => {
            let (s, outcomes) = run_tradeoff(config)?;
            bundle.add_sweep(&s);
            bundle.add_tradeoff(&s, &outcomes);
        }
        Mode::Shift => {
            let scene = config.scene.build()?;
            let design = config.shift_design()?;
            let points = calibration_points(&design, &scene, &config.calibration)?;
            let calibration = points.fit()?;
            let clusters =
                run_shift_experiment(&design, &calibration, &config.experiment.shift, &scene)?;
            bundle.add_calibration("calibration.csv", &points)?;
            bundle.add_shift(&clusters);
        }
    }
    Ok(bundle)
}

/// Calibration records only, for the configured design.
pub fn calibrate(config: &RunConfig) -> Result<ResultsBundle> {
    let scene = config.scene.build()?;
    let points = calibration_points(&config.design()?, &scene, &config.calibration)?;
    let mut bundle = ResultsBundle::new(config.clone());
    bundle.add_calibration("calibration.csv", &points)?;
    Ok(bundle)
}
