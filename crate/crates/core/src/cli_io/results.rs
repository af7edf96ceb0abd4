//! CSV/SVG result bundles and their manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::calibration::CalibrationPoints;
use crate::error::{Error, Result};
use crate::experiments::{ShiftCurveCluster, SingleRun, SweepResult, TradeoffOutcome};
use crate::metrics::{GazeSignal, MetricKind};

use super::config::{Format, RunConfig};
use super::svg::{emit_curve_svg, emit_heatmap_svg, Series, Surface};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const CONFIG_FILE: &str = "config.toml";

/// Decimal text with 9 significant digits; `NaN`, `inf`, `-inf` otherwise.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (_, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let rounded: f64 = sci.parse().expect("round trip");
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the portable canonical config text.
pub fn config_hash(config: &RunConfig) -> String {
    sha256_hex(config.portable_toml().as_bytes())
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    tool_version: &'a str,
    config_hash: String,
    seed: String,
    mode: String,
    design: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    tradeoff_method: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    started_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finished_unix: Option<u64>,
    files: BTreeMap<String, String>,
}

const TRADEOFF_METHOD: &str = "common relative allowance over per-metric optima; \
scale = min (or range when min is below 1e-9, floored at 1e-9); smallest sum of relative increases; \
lexicographic tie-break";

/// Everything a run writes, held in memory until [`write_results`].
#[derive(Debug, Clone)]
pub struct ResultsBundle {
    pub config: RunConfig,
    files: BTreeMap<String, Vec<u8>>,
    started_unix: Option<u64>,
    has_tradeoff: bool,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl ResultsBundle {
    pub fn new(config: RunConfig) -> Self {
        let started_unix = config.output.record_timestamps.then(now_unix);
        Self {
            config,
            files: BTreeMap::new(),
            started_unix,
            has_tradeoff: false,
        }
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn add_file(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(name.into(), bytes);
    }

    fn wants_svg(&self) -> bool {
        self.config.output.wants(Format::Svg)
    }

    fn wants_csv(&self) -> bool {
        self.config.output.wants(Format::Csv)
    }

    pub fn add_calibration(&mut self, name: &str, points: &CalibrationPoints) -> Result<()> {
        let model = points.fit()?;
        let mut rows = Vec::new();
        for (axis, pts, fit) in [
            ("horizontal", &points.horizontal, model.horizontal),
            ("vertical", &points.vertical, model.vertical),
        ] {
            for &(raw, target) in pts {
                rows.push(vec![
                    axis.to_string(),
                    format_number(target),
                    format_number(raw),
                    format_number(fit.a),
                    format_number(fit.b),
                    format_number(fit.c),
                    format_number(fit.residual),
                ]);
            }
        }
        let header = strings(&["axis", "target_deg", "raw", "a", "b", "c", "residual"]);
        if self.wants_csv() {
            self.add_file(name, csv_bytes(&header, &rows));
        }
        Ok(())
    }

    pub fn add_single(&mut self, run: &SingleRun, gt: &GazeSignal) -> Result<()> {
        self.add_calibration("calibration.csv", &run.points)?;
        if self.wants_csv() {
            let r = &run.report;
            let header: Vec<String> = strings(&[
                "acc_h_mean",
                "acc_h_std",
                "acc_v_mean",
                "acc_v_std",
                "cross_hv_mean",
                "cross_hv_std",
                "cross_vh_mean",
                "cross_vh_std",
            ]);
            let row = r.summary().iter().map(|&v| format_number(v)).collect();
            self.add_file("metrics.csv", csv_bytes(&header, &[row]));

            let mut rows = Vec::new();
            let mut acc = (r.accuracy.h.iter(), r.accuracy.v.iter());
            let mut cross = (r.crosstalk.vh.iter(), r.crosstalk.hv.iter());
            for f in &gt.fixations {
                let (a, c) = match f.label {
                    crate::metrics::FixationLabel::H => {
                        (acc.0.next(), gt_cross(&mut cross.0, f, gt))
                    }
                    crate::metrics::FixationLabel::V => {
                        (acc.1.next(), gt_cross(&mut cross.1, f, gt))
                    }
                    crate::metrics::FixationLabel::Center => (None, None),
                };
                rows.push(vec![
                    f.start.to_string(),
                    f.end.to_string(),
                    f.label.as_str().to_string(),
                    a.map_or(String::new(), |v| format_number(*v)),
                    c.map_or(String::new(), format_number),
                ]);
            }
            let header = strings(&["start", "end", "label", "accuracy_deg", "crosstalk"]);
            self.add_file("fixations.csv", csv_bytes(&header, &rows));

            let rows: Vec<Vec<String>> = gt
                .samples
                .iter()
                .zip(&run.estimate.samples)
                .map(|(g, e)| {
                    vec![
                        format_number(g.t),
                        format_number(g.h),
                        format_number(g.v),
                        format_number(e.h),
                        format_number(e.v),
                    ]
                })
                .collect();
            let header = strings(&["t", "gt_h", "gt_v", "est_h", "est_v"]);
            self.add_file("signal.csv", csv_bytes(&header, &rows));
        }
        if self.wants_svg() {
            let take =
                |f: fn(&crate::metrics::GazeSample) -> f64, s: &GazeSignal| -> Vec<(f64, f64)> {
                    s.samples.iter().step_by(10).map(|x| (x.t, f(x))).collect()
                };
            let series = vec![
                Series {
                    label: "gt h".into(),
                    points: take(|s| s.h, gt),
                },
                Series {
                    label: "est h".into(),
                    points: take(|s| s.h, &run.estimate),
                },
                Series {
                    label: "gt v".into(),
                    points: take(|s| s.v, gt),
                },
                Series {
                    label: "est v".into(),
                    points: take(|s| s.v, &run.estimate),
                },
            ];
            let svg = emit_curve_svg(
                &format!("{} signal", run.design.name),
                "t (s)",
                "deg",
                &series,
            );
            self.add_file("signal.svg", svg.into_bytes());
        }
        Ok(())
    }

    pub fn add_sweep(&mut self, sweep: &SweepResult) {
        let names = sweep.parameter_names();
        if self.wants_csv() {
            let mut header: Vec<String> = strings(names);
            header.extend(strings(&[
                "acc_h_mean",
                "acc_h_std",
                "acc_v_mean",
                "acc_v_std",
                "cross_hv_mean",
                "cross_hv_std",
                "cross_vh_mean",
                "cross_vh_std",
            ]));
            header.push("error".into());
            let rows: Vec<Vec<String>> = sweep
                .cells
                .iter()
                .map(|c| {
                    let mut row: Vec<String> = c.params.iter().map(|&v| format_number(v)).collect();
                    row.extend(c.summary().iter().map(|&v| format_number(v)));
                    row.push(c.outcome.as_ref().err().cloned().unwrap_or_default());
                    row
                })
                .collect();
            self.add_file("sweep.csv", csv_bytes(&header, &rows));
        }
        if self.wants_svg() {
            for (name, svg) in sweep_plots(sweep) {
                self.add_file(name, svg.into_bytes());
            }
        }
    }

    pub fn add_tradeoff(&mut self, sweep: &SweepResult, outcomes: &[TradeoffOutcome]) {
        self.has_tradeoff = true;
        if !self.wants_csv() {
            return;
        }
        let names = sweep.parameter_names();
        let mut header = strings(&["group", "metric", "value", "optimum", "allowance"]);
        header.extend(strings(names));
        let mut rows = Vec::new();
        for (g, o) in outcomes.iter().enumerate() {
            for (i, m) in o.metrics.iter().enumerate() {
                let mut row = vec![
                    g.to_string(),
                    m.column().to_string(),
                    format_number(o.values[i]),
                    format_number(o.optima[i]),
                    format_number(o.allowance),
                ];
                row.extend(o.params.iter().map(|&v| format_number(v)));
                rows.push(row);
            }
        }
        self.add_file("tradeoff.csv", csv_bytes(&header, &rows));
    }

    pub fn add_shift(&mut self, clusters: &[ShiftCurveCluster]) {
        if self.wants_csv() {
            let mut rows = Vec::new();
            let mut summary = Vec::new();
            for c in clusters {
                for sc in &c.curves {
                    for (p, e) in sc.curve.positions.iter().zip(&sc.curve.values) {
                        rows.push(vec![
                            c.combination.to_string(),
                            format_number(sc.shift),
                            format_number(*p),
                            format_number(*e),
                        ]);
                    }
                    summary.push(vec![
                        c.combination.to_string(),
                        format_number(sc.shift),
                        format_number(sc.mae),
                    ]);
                }
            }
            let header = strings(&["combination", "shift_mm", "gt_position_deg", "estimate_deg"]);
            self.add_file("shift_curves.csv", csv_bytes(&header, &rows));
            let header = strings(&["combination", "shift_mm", "mae_deg"]);
            self.add_file("shift_summary.csv", csv_bytes(&header, &summary));
        }
        if self.wants_svg() {
            for c in clusters {
                let series: Vec<Series> = c
                    .curves
                    .iter()
                    .map(|sc| Series {
                        label: format!("{} mm", format_number(sc.shift)),
                        points: sc
                            .curve
                            .positions
                            .iter()
                            .copied()
                            .zip(sc.curve.values.iter().copied())
                            .collect(),
                    })
                    .collect();
                let label = c.combination.to_string();
                let svg = emit_curve_svg(
                    &format!("{label} curve cluster"),
                    "ground truth (deg)",
                    "estimate (deg)",
                    &series,
                );
                self.add_file(format!("shift_{label}.svg"), svg.into_bytes());
            }
            let series: Vec<Series> = clusters
                .iter()
                .map(|c| Series {
                    label: c.combination.to_string(),
                    points: c.curves.iter().map(|sc| (sc.shift, sc.mae)).collect(),
                })
                .collect();
            let svg = emit_curve_svg(
                "MAE between curves",
                "sensor shift (mm)",
                "MAE (deg)",
                &series,
            );
            self.add_file("shift_mae.svg", svg.into_bytes());
        }
    }

    /// Manifest text for the current file set.
    pub fn manifest(&self) -> String {
        let config_text = self.config.portable_toml();
        let mut files: BTreeMap<String, String> = self
            .files
            .iter()
            .map(|(k, v)| (k.clone(), sha256_hex(v)))
            .collect();
        files.insert(CONFIG_FILE.into(), sha256_hex(config_text.as_bytes()));
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: sha256_hex(config_text.as_bytes()),
            seed: self.config.output.seed.to_string(),
            mode: self.config.mode().to_string(),
            design: self.config.design.name.to_string(),
            tradeoff_method: self.has_tradeoff.then_some(TRADEOFF_METHOD),
            started_unix: self.started_unix,
            finished_unix: self.started_unix.map(|_| now_unix()),
            files,
        };
        toml::to_string(&m).expect("manifest serializes")
    }
}

fn gt_cross(
    it: &mut std::slice::Iter<'_, f64>,
    f: &crate::metrics::Fixation,
    gt: &GazeSignal,
) -> Option<f64> {
    let driving: f64 = gt.samples[f.start..f.end]
        .iter()
        .map(|s| match f.label {
            crate::metrics::FixationLabel::H => s.h,
            _ => s.v,
        })
        .sum();
    // Zero-driving fixations were skipped when the vector was built.
    if driving == 0.0 {
        None
    } else {
        it.next().copied()
    }
}

/// Heatmaps (2+ parameters) or curves (1 parameter) of every metric mean.
fn sweep_plots(sweep: &SweepResult) -> Vec<(String, String)> {
    let names = sweep.parameter_names();
    let axes = &sweep.grid.axes;
    let mut out = Vec::new();
    for kind in MetricKind::ALL {
        let scale = kind.display_scale();
        let value = |c: usize| sweep.cells[c].mean(kind) * scale;
        if axes.len() == 1 {
            let pts = (0..axes[0].len()).map(|i| (axes[0][i], value(i))).collect();
            let svg = emit_curve_svg(
                &format!("{} {}", sweep.grid.design, kind.label()),
                names[0],
                kind.label(),
                &[Series {
                    label: kind.column().into(),
                    points: pts,
                }],
            );
            out.push((format!("sweep_{}.svg", kind.column()), svg));
            continue;
        }
        // x = first axis, y = second, one slice per value of any further axis.
        let (nx, ny) = (axes[0].len(), axes[1].len());
        let rest: usize = axes[2..].iter().map(Vec::len).product();
        for k in 0..rest {
            let mut values = vec![0.0; nx * ny];
            for ix in 0..nx {
                for iy in 0..ny {
                    values[iy * nx + ix] = value((ix * ny + iy) * rest + k);
                }
            }
            let mut title = format!("{} {}", sweep.grid.design, kind.label());
            let mut file = format!("sweep_{}", kind.column());
            let fixed = sweep.grid.cell(k);
            for (a, name) in names.iter().enumerate().skip(2) {
                let v = fixed[a];
                title.push_str(&format!(", {name} = {}", format_number(v)));
                file.push_str(&format!("_{name}{}", format_number(v)));
            }
            let surface = Surface {
                title,
                x_label: names[0].to_string(),
                y_label: names[1].to_string(),
                x_values: axes[0].clone(),
                y_values: axes[1].clone(),
                values,
            };
            out.push((format!("{file}.svg"), emit_heatmap_svg(&surface)));
        }
    }
    out
}

/// Writes every bundle file, `config.toml` and `manifest.toml` into `dir`.
pub fn write_results(bundle: &ResultsBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for (name, bytes) in &bundle.files {
        put(name, bytes)?;
    }
    put(CONFIG_FILE, bundle.config.portable_toml().as_bytes())?;
    put(MANIFEST_FILE, bundle.manifest().as_bytes())?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(-2.5), "-2.5");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456.7891234), "123456.789");
        assert_eq!(format_number(0.000123456789123), "0.000123456789");
        assert_eq!(format_number(9.9999999999), "10");
        assert_eq!(format_number(f64::NAN), "NaN");
        assert_eq!(format_number(1e12), "1000000000000");
    }

    #[test]
    fn csv_uses_line_feeds() {
        let b = csv_bytes(&strings(&["a", "b"]), &[vec!["1".into(), "2".into()]]);
        assert_eq!(b, b"a,b\n1,2\n");
    }
}
