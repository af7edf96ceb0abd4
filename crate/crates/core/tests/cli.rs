use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn psog(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psog"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
design = "D3"

[scene.camera]
image_rows = 60
image_cols = 80

[scanpath]
dwell_seconds = 0.2
amplitudes = [5, 10]
initial_center_dwells = 1
"#;

#[test]
fn run_writes_a_verifiable_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    let o = psog(&["run", "--config", &cfg, "--out", out_s, "--seed", "7"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "manifest.toml",
        "config.toml",
        "metrics.csv",
        "fixations.csv",
        "calibration.csv",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = \"7\""));

    let o = psog(&["report", "--out", out_s]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("BAD"));

    // tampering is detected
    fs::write(out.join("metrics.csv"), "x\n").unwrap();
    let o = psog(&["report", "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("BAD  metrics.csv"));
}

#[test]
fn saved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = psog(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let saved = a.join("config.toml");
    let o = psog(&[
        "run",
        "--config",
        saved.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["metrics.csv", "signal.csv", "manifest.toml"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "design = \"D1\"\n[scene.eye]\nlenght = 3\n");
    let o = psog(&[
        "run",
        "--config",
        &cfg,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("lenght") && err.contains("line 3"), "{err}");

    let cfg = write_config(
        tmp.path(),
        "[design]\nname = \"D1\"\nparams = { length = 15, width = 2 }\n",
    );
    let o = psog(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("design.params.length"));

    let o = psog(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));

    let o = psog(&["run", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = psog(&[
        "report",
        "--out",
        tmp.path().join("nothing").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn render_writes_graymap_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = psog(&["render", "--yaw", "-5", "--pitch", "3", "--out", out]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let bytes = fs::read(tmp.path().join("eye.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n320 240\n255\n"));
    assert_eq!(bytes.len(), "P5\n320 240\n255\n".len() + 320 * 240);
    let meta = fs::read_to_string(tmp.path().join("eye.toml")).unwrap();
    let meta = psog_sim::eye_render::ImageMetadata::from_toml(&meta).unwrap();
    let image = psog_sim::eye_render::import_eye_image(&bytes, Some(&meta)).unwrap();
    assert_eq!((image.rows(), image.cols()), (240, 320));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(psog(&["--help"]).status.code(), Some(0));
    assert_eq!(psog(&["--version"]).status.code(), Some(0));
}
