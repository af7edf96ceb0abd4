use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psog_sim::cli_io::{self, parse_config_with, write_results, Mode, RunConfig};
use psog_sim::designs::DesignName;
use psog_sim::eye_render::{export_pgm, render_eye_image, EyeState, ImageMetadata};
use psog_sim::Error;

#[derive(Parser)]
#[command(name = "psog", version, about = "Photosensor oculography simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed; overrides `output.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Render one eye image to a binary graymap plus metadata sidecar.
    Render(RenderArgs),
    /// Fit the calibration of the configured design.
    Calibrate,
    /// Single calibrate-and-replay run.
    Run,
    /// Parameter sweep.
    Sweep,
    /// Sweep followed by the trade-off search.
    Tradeoff,
    /// Sensor-shift curve clusters.
    Shift,
    /// Verify a results directory against its manifest and summarize it.
    Report,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    yaw: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pitch: f64,
    #[arg(long, default_value_t = 4.0)]
    pupil: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    shift_x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    shift_y: f64,
    /// Graymap maxval; above 255 writes 16-bit samples.
    #[arg(long, default_value_t = 255)]
    maxval: u16,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config { .. } | Error::ConfigParse { .. }) => 1,
        _ => 2,
    }
}

fn load_config(global: &Global, mode: Mode) -> anyhow::Result<RunConfig> {
    let mut config = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::config("--config", format!("cannot read {}: {e}", path.display()))
            })?;
            parse_config_with(&text, Some(mode))?
        }
        None => RunConfig::new(DesignName::D1, mode),
    };
    if let Some(out) = &global.out {
        config.output.directory = out.clone();
    }
    if let Some(seed) = global.seed {
        config.output.seed = seed;
    }
    Ok(config)
}

fn write(config: &RunConfig, bundle: &cli_io::ResultsBundle) -> anyhow::Result<()> {
    let files = write_results(bundle, &config.output.directory)?;
    println!(
        "wrote {} files to {}",
        files.len(),
        config.output.directory.display()
    );
    Ok(())
}

fn render(global: &Global, args: &RenderArgs) -> anyhow::Result<()> {
    let config = load_config(global, Mode::Single)?;
    let camera = config.scene.camera.with_shift(args.shift_x, args.shift_y);
    let state = EyeState::new(args.yaw, args.pitch, args.pupil);
    let image = render_eye_image(&config.scene.eye, &camera, &state, &config.scene.lighting)?;
    let dir = &config.output.directory;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pgm = dir.join("eye.pgm");
    let meta = dir.join("eye.toml");
    fs::write(&pgm, export_pgm(&image, args.maxval)).map_err(|e| Error::io(&pgm, e))?;
    fs::write(&meta, ImageMetadata::of(&image).to_toml()).map_err(|e| Error::io(&meta, e))?;
    println!("wrote {} and {}", pgm.display(), meta.display());
    Ok(())
}

fn report(global: &Global) -> anyhow::Result<()> {
    let dir: &Path = global.out.as_deref().unwrap_or(Path::new("results"));
    let manifest = dir.join(cli_io::results::MANIFEST_FILE);
    let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let table: toml::Table = text.parse()?;
    for key in [
        "tool",
        "tool_version",
        "mode",
        "design",
        "seed",
        "config_hash",
    ] {
        if let Some(v) = table.get(key) {
            println!(
                "{key}: {}",
                v.as_str().map_or_else(|| v.to_string(), str::to_string)
            );
        }
    }
    let files = table
        .get("files")
        .and_then(|f| f.as_table())
        .cloned()
        .unwrap_or_default();
    let mut bad = 0;
    for (name, hash) in &files {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let ok = cli_io::results::sha256_hex(&bytes) == hash.as_str().unwrap_or_default();
        if !ok {
            bad += 1;
        }
        let rows = if name.ends_with(".csv") {
            format!(
                ", {} rows",
                bytes
                    .iter()
                    .filter(|&&b| b == b'\n')
                    .count()
                    .saturating_sub(1)
            )
        } else {
            String::new()
        };
        println!("{} {name}{rows}", if ok { "ok  " } else { "BAD " });
    }
    if bad > 0 {
        anyhow::bail!("{bad} files do not match the manifest");
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.workers)
        .build_global()?;
    let g = &cli.global;
    match &cli.command {
        Command::Render(args) => render(g, args),
        Command::Report => report(g),
        Command::Calibrate => {
            let config = load_config(g, Mode::Single)?;
            write(&config, &cli_io::calibrate(&config)?)
        }
        Command::Run | Command::Sweep | Command::Tradeoff | Command::Shift => {
            let mode = match cli.command {
                Command::Run => Mode::Single,
                Command::Sweep => Mode::Sweep,
                Command::Tradeoff => Mode::Tradeoff,
                _ => Mode::Shift,
            };
            let config = load_config(g, mode)?;
            write(&config, &cli_io::execute(&config)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
