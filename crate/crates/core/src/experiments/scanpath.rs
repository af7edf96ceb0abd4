//! The jumping-point stimulus used as ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eye_render::PupilDilation;
use crate::metrics::{segment_fixations, GazeSample, GazeSignal, DEFAULT_SETTLE_MS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanpathConfig {
    pub sample_rate: f64,
    pub dwell_seconds: f64,
    /// Degrees, strictly increasing.
    pub amplitudes: Vec<f64>,
    pub initial_center_dwells: usize,
    /// Start-of-dwell samples excluded from fixations.
    pub settle_ms: f64,
    /// Linear ramp at the start of each dwell; 0 gives instantaneous steps.
    pub transition_ms: f64,
    pub dilation: PupilDilation,
}

impl Default for ScanpathConfig {
    fn default() -> Self {
        Self {
            sample_rate: 1000.0,
            dwell_seconds: 1.0,
            amplitudes: vec![2.5, 5.0, 7.5, 10.0],
            initial_center_dwells: 4,
            settle_ms: DEFAULT_SETTLE_MS,
            transition_ms: 0.0,
            dilation: PupilDilation::default(),
        }
    }
}

impl ScanpathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::config("scanpath.sample_rate", "must be > 0"));
        }
        if !(self.dwell_seconds > 0.0 && self.dwell_seconds.is_finite()) {
            return Err(Error::config("scanpath.dwell_seconds", "must be > 0"));
        }
        if self.samples_per_dwell() == 0 {
            return Err(Error::config(
                "scanpath.dwell_seconds",
                "shorter than one sample",
            ));
        }
        if self.amplitudes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::config("scanpath.amplitudes", "must be positive"));
        }
        if self.amplitudes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "scanpath.amplitudes",
                "must be strictly increasing",
            ));
        }
        if !(self.settle_ms >= 0.0) {
            return Err(Error::config("scanpath.settle_ms", "must be >= 0"));
        }
        if !(self.transition_ms >= 0.0 && self.transition_ms <= self.settle_ms) {
            return Err(Error::config(
                "scanpath.transition_ms",
                "must lie in [0, settle_ms] so ramps stay outside fixations",
            ));
        }
        self.dilation.validate()
    }

    pub fn samples_per_dwell(&self) -> usize {
        (self.dwell_seconds * self.sample_rate).round() as usize
    }

    /// Dwell targets (h, v) in presentation order.
    pub fn dwells(&self) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0); self.initial_center_dwells];
        for axis in 0..2 {
            for &a in &self.amplitudes {
                for s in [a, 0.0, -a, 0.0] {
                    out.push(if axis == 0 { (s, 0.0) } else { (0.0, s) });
                }
            }
        }
        out
    }
}

/// Ground-truth gaze signal with fixations attached.
pub fn generate_scanpath(config: &ScanpathConfig) -> Result<GazeSignal> {
    config.validate()?;
    let per_dwell = config.samples_per_dwell();
    let ramp = (config.transition_ms * config.sample_rate / 1000.0).round() as usize;
    let dwells = config.dwells();
    let mut samples = Vec::with_capacity(per_dwell * dwells.len());
    let mut prev = (0.0, 0.0);
    for &(h, v) in &dwells {
        for k in 0..per_dwell {
            let (sh, sv) = if k < ramp && prev != (h, v) {
                let f = (k + 1) as f64 / (ramp + 1) as f64;
                (prev.0 + f * (h - prev.0), prev.1 + f * (v - prev.1))
            } else {
                (h, v)
            };
            let i = samples.len();
            samples.push(GazeSample {
                t: i as f64 / config.sample_rate,
                h: sh,
                v: sv,
            });
        }
        prev = (h, v);
    }
    let mut signal = GazeSignal {
        sample_rate: config.sample_rate,
        samples,
        fixations: Vec::new(),
    };
    signal.fixations = segment_fixations(&signal, config.settle_ms);
    Ok(signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::FixationLabel;

    #[test]
    fn default_scanpath_shape() {
        let s = generate_scanpath(&ScanpathConfig::default()).unwrap();
        assert_eq!(s.len(), 36000);
        assert!((s.duration() - 36.0).abs() < 1e-12);
        let max_h = s.samples.iter().map(|x| x.h.abs()).fold(0.0, f64::max);
        let max_v = s.samples.iter().map(|x| x.v.abs()).fold(0.0, f64::max);
        assert_eq!((max_h, max_v), (10.0, 10.0));
        s.validate().unwrap();
        // 4 initial centre dwells merge into one run.
        let h = s
            .fixations
            .iter()
            .filter(|f| f.label == FixationLabel::H)
            .count();
        let v = s
            .fixations
            .iter()
            .filter(|f| f.label == FixationLabel::V)
            .count();
        assert_eq!((h, v), (8, 8));
    }

    #[test]
    fn single_amplitude_sequence() {
        let cfg = ScanpathConfig {
            amplitudes: vec![5.0],
            initial_center_dwells: 0,
            ..ScanpathConfig::default()
        };
        assert_eq!(
            cfg.dwells(),
            vec![
                (5.0, 0.0),
                (0.0, 0.0),
                (-5.0, 0.0),
                (0.0, 0.0),
                (0.0, 5.0),
                (0.0, 0.0),
                (0.0, -5.0),
                (0.0, 0.0)
            ]
        );
    }

    #[test]
    fn rejects_unsorted_amplitudes() {
        let cfg = ScanpathConfig {
            amplitudes: vec![5.0, 2.5],
            ..ScanpathConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn ramps_stay_outside_fixations() {
        let cfg = ScanpathConfig {
            transition_ms: 30.0,
            ..ScanpathConfig::default()
        };
        let s = generate_scanpath(&cfg).unwrap();
        assert_eq!(s.samples[4000].h, 2.5 / 31.0);
        for f in &s.fixations {
            let first = s.samples[f.start];
            assert!(s.samples[f.start..f.end]
                .iter()
                .all(|x| x.h == first.h && x.v == first.v));
        }
    }
}
