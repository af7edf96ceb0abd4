//! End-to-end replay of a ground-truth signal through a PSOG design.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calibration::{
    apply_calibration, calibration_points, CalibrationModel, CalibrationPoints, CalibrationProtocol,
};
use crate::designs::{design_raw_output, PsogDesign};
use crate::error::Result;
use crate::eye_render::{EyeState, PupilDilation};
use crate::metrics::{GazeSample, GazeSignal, MetricReport};
use crate::scene::{Scene, StateKey};

/// Noise stream for work unit `stream` of a run seeded with `seed`.
pub fn unit_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Render keys needed to replay `gt` with the given pupil trajectory.
pub fn signal_keys(gt: &GazeSignal, dilation: &PupilDilation) -> Vec<StateKey> {
    let mut keys: Vec<StateKey> = gt
        .samples
        .iter()
        .map(|s| StateKey::from_state(&EyeState::new(s.h, s.v, dilation.diameter_at(s.t))))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Estimated gaze for every sample of `gt`.
///
/// Sensor noise, when the scene's chain has any, is drawn from `rng` in sample
/// order; without noise the RNG is never touched.
pub fn simulate_signal(
    design: &PsogDesign,
    scene: &Scene,
    gt: &GazeSignal,
    dilation: &PupilDilation,
    calibration: &CalibrationModel,
    rng: &mut ChaCha8Rng,
) -> Result<GazeSignal> {
    let compiled = scene.compile(design)?;
    let chain = &scene.chain;
    let noisy = chain.is_noisy();
    let mut values_by_key: HashMap<StateKey, Vec<f64>> = HashMap::new();
    let mut out = Vec::with_capacity(gt.samples.len());
    let mut scratch = Vec::with_capacity(compiled.len());
    for s in &gt.samples {
        let key = StateKey::from_state(&EyeState::new(s.h, s.v, dilation.diameter_at(s.t)));
        let values = match values_by_key.get(&key) {
            Some(v) => v,
            None => {
                let img = scene.render_key(key)?;
                values_by_key
                    .entry(key)
                    .or_insert(compiled.sensor_values(&img))
            }
        };
        scratch.clear();
        if noisy {
            scratch.extend(values.iter().map(|&v| chain.apply(v, rng)));
        } else {
            scratch.extend(values.iter().map(|&v| chain.convert(v)));
        }
        let (h_raw, v_raw) = design_raw_output(design, &scratch)?;
        let (h, v) = apply_calibration(calibration, h_raw, v_raw);
        out.push(GazeSample { t: s.t, h, v });
    }
    Ok(GazeSignal {
        sample_rate: gt.sample_rate,
        samples: out,
        fixations: gt.fixations.clone(),
    })
}

/// Everything produced by one calibrate-and-replay run.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub design: PsogDesign,
    pub points: CalibrationPoints,
    pub calibration: CalibrationModel,
    pub estimate: GazeSignal,
    pub report: MetricReport,
}

/// Calibrates `design` on `scene`, replays `gt` and scores the estimate.
pub fn run_single(
    design: &PsogDesign,
    scene: &Scene,
    gt: &GazeSignal,
    dilation: &PupilDilation,
    protocol: &CalibrationProtocol,
    rng: &mut ChaCha8Rng,
) -> Result<SingleRun> {
    let points = calibration_points(design, scene, protocol)?;
    let calibration = points.fit()?;
    let estimate = simulate_signal(design, scene, gt, dilation, &calibration, rng)?;
    let report = MetricReport::compute(&estimate, gt)?;
    Ok(SingleRun {
        design: design.clone(),
        points,
        calibration,
        estimate,
        report,
    })
}
