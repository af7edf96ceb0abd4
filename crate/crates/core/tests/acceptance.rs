//! Acceptance run: one line per criterion, non-zero exit when any fails.

mod common;

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psog_sim::calibration::{calibration_points, fit_axis, CalibrationProtocol};
use psog_sim::cli_io::{Mode, RunConfig};
use psog_sim::designs::{build_design, design_raw_output, DesignAnchors, DesignName, DesignParams};
use psog_sim::experiments::{
    default_pairs, generate_scanpath, run_shift_experiment, run_single, run_sweep,
    tradeoff_optimize, tradeoff_surfaces, unit_rng, Combination, ScanpathConfig, SweepContext,
    SweepGrid, SweepResult,
};
use psog_sim::eye_render::EyeState;
use psog_sim::metrics::{MetricKind, MetricReport};
use psog_sim::scene::Scene;
use psog_sim::sensing::{
    compute_sensor_output, photodiode_current, PhotodiodeConfig, DEFAULT_COVERAGE_SUPERSAMPLING,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit_s: u64, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t > Duration::from_secs(limit_s) {
        Err(format!("took {t:.1?}, limit {limit_s} s"))
    } else {
        Ok(t)
    }
}

fn bundled_scene() -> Scene {
    RunConfig::new(DesignName::D1, Mode::Single)
        .scene
        .build()
        .unwrap()
}

fn default_design(name: DesignName, scene: &Scene) -> psog_sim::designs::PsogDesign {
    build_design(name, &DesignParams::default_for(name), &scene.model).unwrap()
}

fn binning_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let image = common::random_image(&mut rng);
        let area = common::random_area(&mut rng, &image);
        let fast = compute_sensor_output(&image, &area).map_err(|e| e.to_string())?;
        let slow = common::brute_force_output(&image, &area, DEFAULT_COVERAGE_SUPERSAMPLING);
        worst = worst.max((fast - slow).abs());
    }
    let t = within(10, start)?;
    check(
        worst <= 1e-12,
        format!("max |diff| {worst:.3e} over 1000 cases in {t:.2?}"),
    )
}

fn calibration_exactness() -> Outcome {
    let scene = bundled_scene();
    let mut worst: f64 = 0.0;
    for name in DesignName::ALL {
        let design = default_design(name, &scene);
        let points = calibration_points(&design, &scene, &CalibrationProtocol::default())
            .map_err(|e| e.to_string())?;
        let model = points.fit().map_err(|e| e.to_string())?;
        for (fit, pts) in [
            (model.horizontal, &points.horizontal),
            (model.vertical, &points.vertical),
        ] {
            for &(raw, deg) in pts {
                worst = worst.max((fit.eval(raw) - deg).abs());
            }
        }
    }
    check(
        worst <= 1e-9,
        format!("max target error {worst:.3e} deg over D1-D4"),
    )
}

fn affine_invariance() -> Outcome {
    let scene = bundled_scene();
    let scan: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
    let mut worst: f64 = 0.0;
    for name in DesignName::ALL {
        let design = default_design(name, &scene);
        let compiled = scene.compile(&design).map_err(|e| e.to_string())?;
        let raw = |state: EyeState, affine: bool| -> (f64, f64) {
            let img = scene.render(&state).unwrap();
            let mut values = compiled.sensor_values(&img);
            if affine {
                values.iter_mut().for_each(|v| *v = 2.0 * *v + 0.1);
            }
            design_raw_output(&design, &values).unwrap()
        };
        let mut estimates = Vec::new();
        for affine in [false, true] {
            let h_pts: Vec<(f64, f64)> = [-10.0, 0.0, 10.0]
                .iter()
                .map(|&a| (raw(EyeState::new(a, 0.0, 4.0), affine).0, a))
                .collect();
            let v_pts: Vec<(f64, f64)> = [-10.0, 0.0, 10.0]
                .iter()
                .map(|&a| (raw(EyeState::new(0.0, a, 4.0), affine).1, a))
                .collect();
            let fh = fit_axis(&h_pts, "horizontal").map_err(|e| e.to_string())?;
            let fv = fit_axis(&v_pts, "vertical").map_err(|e| e.to_string())?;
            let mut est = Vec::new();
            for &a in &scan {
                let (h, _) = raw(EyeState::new(a, 0.0, 4.0), affine);
                let (_, v) = raw(EyeState::new(0.0, a, 4.0), affine);
                est.push((fh.eval(h), fv.eval(v)));
            }
            estimates.push(est);
        }
        for (a, b) in estimates[0].iter().zip(&estimates[1]) {
            worst = worst.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
        }
    }
    check(
        worst <= 1e-6,
        format!("max estimate change {worst:.3e} deg over +-10 deg scans, D1-D4"),
    )
}

fn identity_metrics() -> Outcome {
    let gt = generate_scanpath(&ScanpathConfig::default()).map_err(|e| e.to_string())?;
    let rep = MetricReport::compute(&gt, &gt).map_err(|e| e.to_string())?;
    let all_zero = rep.summary().iter().all(|&v| v == 0.0)
        && rep
            .accuracy
            .h
            .iter()
            .chain(&rep.accuracy.v)
            .all(|&v| v == 0.0)
        && rep
            .crosstalk
            .hv
            .iter()
            .chain(&rep.crosstalk.vh)
            .all(|&v| v == 0.0);
    check(
        all_zero && !rep.accuracy.h.is_empty() && !rep.crosstalk.hv.is_empty(),
        format!(
            "{} H and {} V fixations, all metrics exactly 0",
            rep.accuracy.h.len(),
            rep.accuracy.v.len()
        ),
    )
}

fn symmetric_crosstalk_null() -> Outcome {
    let scene = common::symmetric_scene();
    let design = default_design(DesignName::D1, &scene);
    let cfg = ScanpathConfig::default();
    let gt = generate_scanpath(&cfg).map_err(|e| e.to_string())?;
    let run = run_single(
        &design,
        &scene,
        &gt,
        &cfg.dilation,
        &CalibrationProtocol::default(),
        &mut unit_rng(0, 0),
    )
    .map_err(|e| e.to_string())?;
    let worst = run.report.crosstalk.hv.iter().cloned().fold(0.0, f64::max);
    let mean = run.report.cross_hv_mean;
    check(
        mean < 1e-3,
        format!("D1 cross_hv mean {mean:.3e}, worst fixation {worst:.3e} (limit 1e-3)"),
    )
}

fn photovoltaic_linearity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..100 {
        let cfg = PhotodiodeConfig {
            responsivity: rng.random_range(0.01..1.0),
            ..PhotodiodeConfig::default()
        };
        let power = rng.random_range(0.0..1e-3);
        if photodiode_current(&cfg, power) != cfg.responsivity * power {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} of 100 pairs differ from R*P"),
    )
}

fn d1_sweep(scene: &Scene) -> Result<SweepResult, String> {
    let cfg = ScanpathConfig::default();
    let gt = generate_scanpath(&cfg).map_err(|e| e.to_string())?;
    let axis: Vec<f64> = (1..=12).map(f64::from).collect();
    let grid = SweepGrid {
        design: DesignName::D1,
        axes: vec![axis.clone(), axis],
    };
    let protocol = CalibrationProtocol::default();
    let anchors = DesignAnchors::for_model(&scene.model);
    let ctx = SweepContext {
        scene,
        gt: &gt,
        dilation: &cfg.dilation,
        protocol: &protocol,
        anchors: &anchors,
        seed: 0,
    };
    run_sweep(&grid, &ctx).map_err(|e| e.to_string())
}

fn sweep_trend(sweep: &SweepResult, elapsed: Duration) -> Outcome {
    if elapsed > Duration::from_secs(600) {
        return Err(format!("sweep took {elapsed:.1?}, limit 10 min"));
    }
    let acc: Vec<(f64, f64)> = sweep
        .cells
        .iter()
        .map(|c| (c.params[0], c.mean(MetricKind::AccH)))
        .collect();
    let best = acc
        .iter()
        .map(|a| a.1)
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let short: Vec<f64> = acc.iter().filter(|a| a.0 <= 1.0).map(|a| a.1).collect();
    let short_mean = short.iter().sum::<f64>() / short.len() as f64;
    check(
        best < 1.0 && short_mean >= 2.0 * best && sweep.failures() == 0,
        format!(
            "best acc_h {best:.3} deg, mean at L <= 1 mm {short_mean:.3} deg ({:.1}x), {} cells in {elapsed:.1?}",
            short_mean / best,
            sweep.cells.len()
        ),
    )
}

fn shift_baseline() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for name in DesignName::ALL {
        let t = Instant::now();
        let cfg = RunConfig::new(name, Mode::Shift);
        let scene = cfg.scene.build().map_err(|e| e.to_string())?;
        let design = cfg.shift_design().map_err(|e| e.to_string())?;
        let cal = calibration_points(&design, &scene, &cfg.calibration)
            .and_then(|p| p.fit())
            .map_err(|e| e.to_string())?;
        let clusters = run_shift_experiment(&design, &cal, &cfg.experiment.shift, &scene)
            .map_err(|e| e.to_string())?;
        ok &= t.elapsed() < Duration::from_secs(300);
        let mut parts = Vec::new();
        for cl in &clusters {
            let base = cl.baseline().mae;
            ok &= base == 0.0;
            let c = cl.combination;
            if c == Combination::parse("H-H").unwrap() || c == Combination::parse("V-V").unwrap() {
                let lo = cl.at(-2.0).map_or(f64::NAN, |s| s.mae);
                let hi = cl.at(2.0).map_or(f64::NAN, |s| s.mae);
                ok &= lo > base && hi > base;
                parts.push(format!("{c} {lo:.2}/{hi:.2}"));
            }
        }
        lines.push(format!("{name}: {}", parts.join(", ")));
    }
    let t = start.elapsed();
    check(
        ok,
        format!(
            "zero-shift MAE 0 everywhere; MAE at -2/+2 mm {} ({t:.1?})",
            lines.join("; ")
        ),
    )
}

fn tradeoff_dominance(sweep: &SweepResult) -> Outcome {
    let outcomes =
        tradeoff_optimize(sweep, &default_pairs(DesignName::D1)).map_err(|e| e.to_string())?;
    let dominated = outcomes
        .iter()
        .all(|o| o.values.iter().zip(&o.optima).all(|(v, m)| v >= m));
    let xs: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.5).collect();
    let f1: Vec<f64> = xs.iter().map(|x| (x - 1.0).powi(2)).collect();
    let f2: Vec<f64> = xs.iter().map(|x| (x + 1.0).powi(2)).collect();
    let params: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let (cell, _) = tradeoff_surfaces(&[f1, f2], &params).map_err(|e| e.to_string())?;
    let picks: Vec<String> = outcomes.iter().map(|o| format!("{:?}", o.params)).collect();
    check(
        dominated && xs[cell] == 0.0,
        format!(
            "D1 picks {} dominate the optima; 1-D oracle returns x = {}",
            picks.join(", "),
            xs[cell]
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("sweep.toml");
    fs::write(
        &cfg,
        "[design]\nname = \"D1\"\nsweep.length = { start = 1, stop = 12, step = 1 }\n\
         sweep.width = { start = 1, stop = 12, step = 1 }\n\
         [scene.sensing]\nnoise_stddev = 0.002\n",
    )
    .map_err(|e| e.to_string())?;
    let mut dirs = Vec::new();
    for workers in ["1", "3"] {
        let out = tmp.path().join(format!("w{workers}"));
        let o = Command::new(env!("CARGO_BIN_EXE_psog"))
            .args(["sweep", "--config", cfg.to_str().unwrap(), "--out"])
            .arg(&out)
            .args(["--seed", "12345", "--workers", workers])
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        dirs.push(out);
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0])
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut other: Vec<_> = fs::read_dir(&dirs[1])
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    other.sort();
    if names != other {
        return Err("bundles list different files".into());
    }
    let differing: Vec<String> = names
        .iter()
        .filter(|n| fs::read(dirs[0].join(n)).ok() != fs::read(dirs[1].join(n)).ok())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    check(
        differing.is_empty(),
        format!(
            "{} files byte-identical for 1 vs 3 workers (noisy 144-cell sweep){}",
            names.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!("; differ: {}", differing.join(", "))
            }
        ),
    )
}

fn main() -> ExitCode {
    let scene = bundled_scene();
    let sweep_start = Instant::now();
    let sweep = d1_sweep(&scene);
    let sweep_time = sweep_start.elapsed();

    let criteria: Vec<Criterion> = vec![
        (1, "binning oracle", Box::new(binning_oracle)),
        (2, "calibration exactness", Box::new(calibration_exactness)),
        (3, "affine invariance", Box::new(affine_invariance)),
        (4, "identity metrics", Box::new(identity_metrics)),
        (
            5,
            "symmetric-model crosstalk null",
            Box::new(symmetric_crosstalk_null),
        ),
        (
            6,
            "photovoltaic linearity",
            Box::new(photovoltaic_linearity),
        ),
        (
            7,
            "sweep trend",
            Box::new(|| sweep.clone().and_then(|s| sweep_trend(&s, sweep_time))),
        ),
        (
            8,
            "shift baseline and degradation",
            Box::new(shift_baseline),
        ),
        (
            9,
            "trade-off dominance",
            Box::new(|| sweep.clone().and_then(|s| tradeoff_dominance(&s))),
        ),
        (10, "determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (n, label, f) in &criteria {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} ({label}): PASS  {detail} [{secs:.2} s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} ({label}): FAIL  {detail} [{secs:.2} s]");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
