//! Fixation-gated accuracy, crosstalk and MAE-between-curves.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples excluded at the end of every dwell.
pub const TAIL_EXCLUSION_MS: f64 = 20.0;
pub const DEFAULT_SETTLE_MS: f64 = 80.0;
/// Shortest fixation kept.
pub const MIN_FIXATION_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixationLabel {
    H,
    V,
    Center,
}

impl FixationLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FixationLabel::H => "H",
            FixationLabel::V => "V",
            FixationLabel::Center => "center",
        }
    }
}

/// Half-open sample range `[start, end)` of one fixation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixation {
    pub start: usize,
    pub end: usize,
    pub label: FixationLabel,
}

impl Fixation {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub h: f64,
    pub v: f64,
}

/// A gaze time series with its fixation index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeSignal {
    pub sample_rate: f64,
    pub samples: Vec<GazeSample>,
    pub fixations: Vec<Fixation>,
}

impl GazeSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0) {
            return Err(Error::Contract("sample_rate must be > 0".into()));
        }
        let dt = 1.0 / self.sample_rate;
        for w in self.samples.windows(2) {
            if !(w[1].t > w[0].t) || ((w[1].t - w[0].t) - dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(Error::Contract(
                    "timestamps must increase at 1/sample_rate".into(),
                ));
            }
        }
        let mut last_end = 0;
        for f in &self.fixations {
            if f.start < last_end || f.end > self.samples.len() || f.len() < MIN_FIXATION_SAMPLES {
                return Err(Error::Contract(format!(
                    "fixation [{}, {}) overlaps, is out of bounds or shorter than {MIN_FIXATION_SAMPLES} samples",
                    f.start, f.end
                )));
            }
            last_end = f.end;
        }
        Ok(())
    }
}

/// One fixation per constant-gaze dwell, trimmed by `settle_ms` at the start
/// and [`TAIL_EXCLUSION_MS`] at the end.
///
/// Dwells are maximal runs of identical ground-truth samples, which is how the
/// synthetic scanpath encodes its step times.
pub fn segment_fixations(gt: &GazeSignal, settle_ms: f64) -> Vec<Fixation> {
    let settle = (settle_ms * gt.sample_rate / 1000.0).round() as usize;
    let tail = (TAIL_EXCLUSION_MS * gt.sample_rate / 1000.0).round() as usize;
    let mut out = Vec::new();
    let s = &gt.samples;
    let mut start = 0;
    while start < s.len() {
        let mut end = start + 1;
        while end < s.len() && s[end].h == s[start].h && s[end].v == s[start].v {
            end += 1;
        }
        let dwell = end - start;
        if dwell >= settle + tail + MIN_FIXATION_SAMPLES {
            let (h, v) = (s[start].h, s[start].v);
            let label = if h == 0.0 && v == 0.0 {
                FixationLabel::Center
            } else if h.abs() >= v.abs() {
                FixationLabel::H
            } else {
                FixationLabel::V
            };
            out.push(Fixation {
                start: start + settle,
                end: end - tail,
                label,
            });
        } else if dwell > 1 {
            log::warn!(
                "dwell of {dwell} samples at index {start} is shorter than its exclusions; skipped"
            );
        }
        start = end;
    }
    out
}

fn check_aligned(sim: &GazeSignal, gt: &GazeSignal) -> Result<()> {
    if sim.samples.len() != gt.samples.len() {
        return Err(Error::Contract(format!(
            "simulated signal has {} samples, ground truth {}",
            sim.samples.len(),
            gt.samples.len()
        )));
    }
    if let Some(f) = gt.fixations.iter().find(|f| f.end > gt.samples.len()) {
        return Err(Error::Contract(format!(
            "fixation end {} out of bounds",
            f.end
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccuracyVectors {
    /// Degrees, one per H-labelled fixation.
    pub h: Vec<f64>,
    /// Degrees, one per V-labelled fixation.
    pub v: Vec<f64>,
}

/// Mean absolute error per fixation.
pub fn compute_accuracy(sim: &GazeSignal, gt: &GazeSignal) -> Result<AccuracyVectors> {
    check_aligned(sim, gt)?;
    let mut out = AccuracyVectors::default();
    for f in &gt.fixations {
        let range = f.start..f.end;
        let m = f.len() as f64;
        match f.label {
            FixationLabel::H => {
                let e: f64 = range
                    .map(|j| (sim.samples[j].h - gt.samples[j].h).abs())
                    .sum();
                out.h.push(e / m);
            }
            FixationLabel::V => {
                let e: f64 = range
                    .map(|j| (sim.samples[j].v - gt.samples[j].v).abs())
                    .sum();
                out.v.push(e / m);
            }
            FixationLabel::Center => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrosstalkVectors {
    /// Stray horizontal movement on V fixations, fraction.
    pub hv: Vec<f64>,
    /// Stray vertical movement on H fixations, fraction.
    pub vh: Vec<f64>,
}

/// Absolute ratio of the stray-channel deviation to the driving-axis sum.
pub fn compute_crosstalk(sim: &GazeSignal, gt: &GazeSignal) -> Result<CrosstalkVectors> {
    check_aligned(sim, gt)?;
    let mut out = CrosstalkVectors::default();
    for f in &gt.fixations {
        let range = f.start..f.end;
        let (mut sim_h, mut sim_v, mut gt_h, mut gt_v) = (0.0, 0.0, 0.0, 0.0);
        for j in range {
            sim_h += sim.samples[j].h;
            sim_v += sim.samples[j].v;
            gt_h += gt.samples[j].h;
            gt_v += gt.samples[j].v;
        }
        let (target, stray, driving) = match f.label {
            FixationLabel::V => (&mut out.hv, sim_h - gt_h, gt_v),
            FixationLabel::H => (&mut out.vh, sim_v - gt_v, gt_h),
            FixationLabel::Center => continue,
        };
        if driving == 0.0 {
            debug!(
                "fixation [{}, {}) has zero driving-axis sum; crosstalk skipped",
                f.start, f.end
            );
            continue;
        }
        target.push((stray / driving).abs());
    }
    Ok(out)
}

/// Mean and (population) standard deviation; NaN for an empty vector.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    AccH,
    AccV,
    CrossHV,
    CrossVH,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::AccH,
        MetricKind::AccV,
        MetricKind::CrossHV,
        MetricKind::CrossVH,
    ];

    pub fn column(self) -> &'static str {
        match self {
            MetricKind::AccH => "acc_h",
            MetricKind::AccV => "acc_v",
            MetricKind::CrossHV => "cross_hv",
            MetricKind::CrossVH => "cross_vh",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::AccH => "Acc. H (deg)",
            MetricKind::AccV => "Acc. V (deg)",
            MetricKind::CrossHV => "Cross. HV (%)",
            MetricKind::CrossVH => "Cross. VH (%)",
        }
    }

    /// Factor from stored units to displayed units.
    pub fn display_scale(self) -> f64 {
        match self {
            MetricKind::AccH | MetricKind::AccV => 1.0,
            MetricKind::CrossHV | MetricKind::CrossVH => 100.0,
        }
    }
}

/// Summary of accuracy (degrees) and crosstalk (fractions) for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub acc_h_mean: f64,
    pub acc_h_std: f64,
    pub acc_v_mean: f64,
    pub acc_v_std: f64,
    pub cross_hv_mean: f64,
    pub cross_hv_std: f64,
    pub cross_vh_mean: f64,
    pub cross_vh_std: f64,
    pub accuracy: AccuracyVectors,
    pub crosstalk: CrosstalkVectors,
}

impl MetricReport {
    pub fn from_vectors(accuracy: AccuracyVectors, crosstalk: CrosstalkVectors) -> Self {
        let (acc_h_mean, acc_h_std) = mean_std(&accuracy.h);
        let (acc_v_mean, acc_v_std) = mean_std(&accuracy.v);
        let (cross_hv_mean, cross_hv_std) = mean_std(&crosstalk.hv);
        let (cross_vh_mean, cross_vh_std) = mean_std(&crosstalk.vh);
        Self {
            acc_h_mean,
            acc_h_std,
            acc_v_mean,
            acc_v_std,
            cross_hv_mean,
            cross_hv_std,
            cross_vh_mean,
            cross_vh_std,
            accuracy,
            crosstalk,
        }
    }

    pub fn compute(sim: &GazeSignal, gt: &GazeSignal) -> Result<Self> {
        Ok(Self::from_vectors(
            compute_accuracy(sim, gt)?,
            compute_crosstalk(sim, gt)?,
        ))
    }

    pub fn mean(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::AccH => self.acc_h_mean,
            MetricKind::AccV => self.acc_v_mean,
            MetricKind::CrossHV => self.cross_hv_mean,
            MetricKind::CrossVH => self.cross_vh_mean,
        }
    }

    pub fn std(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::AccH => self.acc_h_std,
            MetricKind::AccV => self.acc_v_std,
            MetricKind::CrossHV => self.cross_hv_std,
            MetricKind::CrossVH => self.cross_vh_std,
        }
    }

    /// The eight summary numbers in CSV column order.
    pub fn summary(&self) -> [f64; 8] {
        [
            self.acc_h_mean,
            self.acc_h_std,
            self.acc_v_mean,
            self.acc_v_std,
            self.cross_hv_mean,
            self.cross_hv_std,
            self.cross_vh_mean,
            self.cross_vh_std,
        ]
    }
}

/// A (ground-truth position → estimate) curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

/// Mean absolute difference between two curves on the same position grid.
pub fn mae_between_curves(curve: &Curve, baseline: &Curve) -> Result<f64> {
    if curve.positions.len() != curve.values.len()
        || baseline.positions.len() != baseline.values.len()
    {
        return Err(Error::Contract(
            "curve positions and values differ in length".into(),
        ));
    }
    if curve.positions != baseline.positions {
        return Err(Error::Contract(
            "curves are sampled on different position grids".into(),
        ));
    }
    if curve.positions.is_empty() {
        return Err(Error::Contract("empty curve".into()));
    }
    let sum: f64 = curve
        .values
        .iter()
        .zip(&baseline.values)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / curve.values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(h: &[f64], v: &[f64], fixations: Vec<Fixation>) -> GazeSignal {
        GazeSignal {
            sample_rate: 1000.0,
            samples: h
                .iter()
                .zip(v)
                .enumerate()
                .map(|(i, (&h, &v))| GazeSample {
                    t: i as f64 / 1000.0,
                    h,
                    v,
                })
                .collect(),
            fixations,
        }
    }

    fn step_signal(dwells: &[(f64, f64, usize)]) -> GazeSignal {
        let mut h = Vec::new();
        let mut v = Vec::new();
        for &(a, b, n) in dwells {
            h.extend(std::iter::repeat_n(a, n));
            v.extend(std::iter::repeat_n(b, n));
        }
        signal(&h, &v, Vec::new())
    }

    #[test]
    fn one_second_dwell_gives_900_samples() {
        let gt = step_signal(&[(0.0, 0.0, 1000), (5.0, 0.0, 1000), (0.0, -5.0, 90)]);
        let f = segment_fixations(&gt, 80.0);
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].len(), 900);
        assert_eq!(f[0].label, FixationLabel::Center);
        assert_eq!(f[1].label, FixationLabel::H);
        assert_eq!((f[1].start, f[1].end), (1080, 1980));
    }

    #[test]
    fn accuracy_hand_example() {
        let gt = signal(
            &[5.0, 5.0, 5.0],
            &[0.0; 3],
            vec![Fixation {
                start: 0,
                end: 3,
                label: FixationLabel::H,
            }],
        );
        let sim = signal(&[5.1, 4.8, 5.3], &[0.0; 3], Vec::new());
        let acc = compute_accuracy(&sim, &gt).unwrap();
        assert!((acc.h[0] - 0.2).abs() < 1e-12);
        assert!(acc.v.is_empty());
    }

    #[test]
    fn crosstalk_hand_example_and_center_skip() {
        let gt = signal(
            &[0.0; 8],
            &[10.0, 10.0, 10.0, 10.0, 0.0, 0.0, 0.0, 0.0],
            vec![
                Fixation {
                    start: 0,
                    end: 4,
                    label: FixationLabel::V,
                },
                Fixation {
                    start: 4,
                    end: 8,
                    label: FixationLabel::V,
                },
            ],
        );
        let sim = signal(
            &[0.5; 8],
            &[10.0, 10.0, 10.0, 10.0, 0.0, 0.0, 0.0, 0.0],
            Vec::new(),
        );
        let c = compute_crosstalk(&sim, &gt).unwrap();
        assert_eq!(c.hv.len(), 1);
        assert!((c.hv[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn misaligned_signals_rejected() {
        let gt = signal(&[0.0; 3], &[0.0; 3], Vec::new());
        let sim = signal(&[0.0; 2], &[0.0; 2], Vec::new());
        assert!(compute_accuracy(&sim, &gt).is_err());
        assert!(compute_crosstalk(&sim, &gt).is_err());
    }

    #[test]
    fn mae_examples() {
        let c0 = Curve {
            positions: vec![-1.0, 0.0, 1.0],
            values: vec![0.5, 1.0, 1.5],
        };
        let c1 = Curve {
            positions: vec![-1.0, 0.0, 1.0],
            values: vec![0.0, 1.0, 2.0],
        };
        assert!((mae_between_curves(&c1, &c0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mae_between_curves(&c0, &c0).unwrap(), 0.0);
        let positions: Vec<f64> = (0..41).map(|i| -10.0 + 0.5 * i as f64).collect();
        let base = Curve {
            positions: positions.clone(),
            values: positions.clone(),
        };
        let up = Curve {
            positions: positions.clone(),
            values: positions.iter().map(|p| p + 1.0).collect(),
        };
        assert!((mae_between_curves(&up, &base).unwrap() - 1.0).abs() < 1e-12);
        let other = Curve {
            positions: vec![0.0, 1.0, 2.0],
            values: vec![0.0; 3],
        };
        assert!(matches!(
            mae_between_curves(&other, &c0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn report_is_consistent_with_vectors() {
        let acc = AccuracyVectors {
            h: vec![0.1, 0.3],
            v: vec![0.2],
        };
        let cross = CrosstalkVectors {
            hv: vec![0.01, 0.03, 0.02],
            vh: vec![],
        };
        let r = MetricReport::from_vectors(acc, cross);
        assert!((r.acc_h_mean - 0.2).abs() < 1e-15);
        assert!((r.acc_h_std - 0.1).abs() < 1e-15);
        assert_eq!(r.acc_v_std, 0.0);
        assert!(r.cross_vh_mean.is_nan());
    }
}
