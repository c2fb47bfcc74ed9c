//! Command-line front end over the irpipe library: calibrate tables, correct
//! recorded stacks, render synthetic footage, run sweep harnesses, and time
//! the pipeline. Exit codes: 0 success, 2 usage error, 3 domain error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use irpipe::config::load_config;
use irpipe::frame::{FrameStack, RawFrame};
use irpipe::io::{read_container, read_pgm, write_container, write_pgm};
use irpipe::nuc::{
    calibrate_shutter, calibrate_shutterless, read_cal, write_cal, CalMode,
    CalibrationSetpoints, CalibrationTable,
};
use irpipe::pipeline::{
    run_pipeline, sweep_calibration_temperature, sweep_stage_powerset, sweep_tonemap,
    SweepOptions, SweepReport, TimingReport, STAGE_NAMES,
};
use irpipe::report::{write_csv, write_svg};
use irpipe::sim::{
    build_noise_model, generate_calibration_set, simulate_stack, NoiseModelParams, Scene,
};
use irpipe::tonemap::TonemapAlgorithm;
use irpipe::DisplayFrame;

#[derive(Parser)]
#[command(name = "irpipe", version, about = "Thermal infrared image correction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a per-pixel correction table from flat-field reference stacks.
    Calibrate(CalibrateArgs),
    /// Correct a recorded stack and write 8-bit display frames.
    Correct(CorrectArgs),
    /// Render a synthetic raw stack from a scenario config.
    Simulate(SimulateArgs),
    /// Run a sweep harness and write its CSV (and optional SVG) report.
    Sweep(SweepArgs),
    /// Time the pipeline per stage over a recorded stack.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Shutter,
    Shutterless,
}

impl From<ModeArg> for CalMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Shutter => CalMode::Shutter,
            ModeArg::Shutterless => CalMode::Shutterless,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EmitArg {
    /// One 8-bit PGM file per corrected frame.
    Pgm8,
    /// A single container holding the corrected frames at bit depth 8.
    Tir,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Powerset,
    Temperature,
    Tonemap,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Calibration mode.
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Cold flat-field reference stack (.tir).
    #[arg(long)]
    cold: PathBuf,
    /// Hot flat-field reference stack (.tir).
    #[arg(long)]
    hot: PathBuf,
    /// Second-ambient reference stack (.tir); required for shutterless mode.
    #[arg(long)]
    ref2: Option<PathBuf>,
    /// Scene/ambient temperatures: "<cold>,<hot>@<amb>" for shutter mode or
    /// "<cold>,<hot>@<amb1>:<amb2>:<scene3>" for shutterless mode.
    #[arg(long)]
    setpoints: String,
    /// Output table path (.cal).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrectArgs {
    /// Calibration table (.cal).
    #[arg(long)]
    table: PathBuf,
    /// Pipeline config file.
    #[arg(long)]
    config: PathBuf,
    /// Input stack: a .tir container or a single 16-bit PGM.
    #[arg(long)]
    r#in: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Output format for corrected frames.
    #[arg(long, value_enum, default_value_t = EmitArg::Pgm8)]
    emit: EmitArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config file; the [simulator] section drives the render.
    #[arg(long)]
    scenario: PathBuf,
    /// Number of frames to render.
    #[arg(long)]
    frames: usize,
    /// Output container path (.tir).
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's simulator seed (default: the config value).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Which sweep harness to run.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Config file supplying the simulator, pipeline, and sweep sections.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's repeat count.
    #[arg(long)]
    repeats: Option<usize>,
    /// Override the config's master seed (default: the config value).
    #[arg(long)]
    master_seed: Option<u64>,
    /// Calibration setpoints; defaults to "10,40@25" in shutter mode and
    /// "10,40@30:35:10" in shutterless mode.
    #[arg(long)]
    setpoints: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also render the report as an SVG chart.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Calibration table (.cal).
    #[arg(long)]
    table: PathBuf,
    /// Pipeline config file.
    #[arg(long)]
    config: PathBuf,
    /// Input stack: a .tir container or a single 16-bit PGM.
    #[arg(long)]
    r#in: PathBuf,
    /// Frames to time; the input stack is cycled to reach this count.
    #[arg(long)]
    frames: usize,
}

enum CliError {
    Usage(String),
    Domain(irpipe::Error),
}

impl From<irpipe::Error> for CliError {
    fn from(err: irpipe::Error) -> Self {
        CliError::Domain(err)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    // Die quietly when a downstream pager closes the pipe instead of
    // panicking inside println!.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Correct(args) => cmd_correct(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(3)
        }
    }
}

/// Parses "<cold>,<hot>@<amb>" (shutter) or "<cold>,<hot>@<amb1>:<amb2>:<scene3>".
fn parse_setpoints(mode: CalMode, spec: &str) -> Result<CalibrationSetpoints, CliError> {
    let bad = || {
        usage(format!(
            "bad --setpoints {spec:?}: expected \"<cold>,<hot>@<amb>\" for shutter mode \
             or \"<cold>,<hot>@<amb1>:<amb2>:<scene3>\" for shutterless mode"
        ))
    };
    let temp = |text: &str| -> Result<f64, CliError> {
        text.trim().parse::<f64>().map_err(|_| bad())
    };
    let (scenes, ambients) = spec.split_once('@').ok_or_else(bad)?;
    let (cold, hot) = scenes.split_once(',').ok_or_else(bad)?;
    let (cold, hot) = (temp(cold)?, temp(hot)?);
    let parts: Vec<&str> = ambients.split(':').collect();
    match (mode, parts.as_slice()) {
        (CalMode::Shutter, [amb]) => Ok(CalibrationSetpoints {
            t_scene_cold_c: cold,
            t_scene_hot_c: hot,
            t_amb_1_c: temp(amb)?,
            t_amb_2_c: None,
            t_scene_3_c: None,
        }),
        (CalMode::Shutterless, [amb_1, amb_2, scene_3]) => Ok(CalibrationSetpoints {
            t_scene_cold_c: cold,
            t_scene_hot_c: hot,
            t_amb_1_c: temp(amb_1)?,
            t_amb_2_c: Some(temp(amb_2)?),
            t_scene_3_c: Some(temp(scene_3)?),
        }),
        _ => Err(bad()),
    }
}

fn default_setpoints(mode: CalMode) -> CalibrationSetpoints {
    match mode {
        CalMode::Shutter => CalibrationSetpoints {
            t_scene_cold_c: 10.0,
            t_scene_hot_c: 40.0,
            t_amb_1_c: 25.0,
            t_amb_2_c: None,
            t_scene_3_c: None,
        },
        CalMode::Shutterless => CalibrationSetpoints {
            t_scene_cold_c: 10.0,
            t_scene_hot_c: 40.0,
            t_amb_1_c: 30.0,
            t_amb_2_c: Some(35.0),
            t_scene_3_c: Some(10.0),
        },
    }
}

/// Loads a stack from a .tir container, or a single PGM as a one-frame stack.
fn read_stack(path: &Path) -> Result<FrameStack, CliError> {
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let frame = read_pgm(path)?;
        Ok(FrameStack::new(vec![frame], path.display().to_string())?)
    } else {
        Ok(read_container(path)?)
    }
}

/// Applies the IRPIPE_THREADS cap to the sweep worker count (0 = auto).
fn thread_cap(opts: &mut SweepOptions) -> Result<(), CliError> {
    let Ok(text) = std::env::var("IRPIPE_THREADS") else {
        return Ok(());
    };
    let cap: usize = text.trim().parse().map_err(|_| {
        usage(format!(
            "IRPIPE_THREADS must be an unsigned integer, got {text:?}"
        ))
    })?;
    if cap > 0 {
        opts.workers = if opts.workers == 0 {
            cap
        } else {
            opts.workers.min(cap)
        };
    }
    Ok(())
}

fn print_timing(report: &TimingReport) {
    println!("stage,mean_ms,min_ms,max_ms");
    for (name, t) in STAGE_NAMES.iter().zip(&report.stages) {
        println!("{name},{:.6},{:.6},{:.6}", t.mean_ms, t.min_ms, t.max_ms);
    }
    println!("total,{:.6},,", report.total_mean_ms);
}

fn display_to_raw8(display: &DisplayFrame, fpa_temp_c: f64) -> Result<RawFrame, CliError> {
    let samples = display.samples().iter().map(|&v| v as u16).collect();
    Ok(RawFrame::new(
        display.width(),
        display.height(),
        8,
        fpa_temp_c,
        samples,
    )?)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let mode = CalMode::from(args.mode);
    let setpoints = parse_setpoints(mode, &args.setpoints)?;
    let cold = read_stack(&args.cold)?;
    let hot = read_stack(&args.hot)?;
    let table = match mode {
        CalMode::Shutter => {
            if args.ref2.is_some() {
                return Err(usage("--ref2 is only valid with --mode shutterless"));
            }
            calibrate_shutter(&cold, &hot, &setpoints)?
        }
        CalMode::Shutterless => {
            let ref2 = args
                .ref2
                .ok_or_else(|| usage("--mode shutterless requires --ref2"))?;
            let ref2 = read_stack(&ref2)?;
            calibrate_shutterless(&cold, &hot, &ref2, &setpoints)?
        }
    };
    write_cal(&args.out, &table)?;

    let flags = table.bad_pixels.flags();
    let flagged = flags.iter().filter(|&&b| b).count();
    println!(
        "bad pixels: {flagged} of {} ({:.3}%)",
        flags.len(),
        100.0 * flagged as f64 / flags.len() as f64
    );
    let live: Vec<f64> = table
        .gain
        .iter()
        .zip(flags)
        .filter(|(_, &bad)| !bad)
        .map(|(&g, _)| g)
        .collect();
    let mean = live.iter().sum::<f64>() / live.len().max(1) as f64;
    let min = live.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = live.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("gain over live pixels: mean {mean:.4}, min {min:.4}, max {max:.4}");
    println!("table written to {}", args.out.display());
    Ok(())
}

fn cmd_correct(args: CorrectArgs) -> Result<(), CliError> {
    let table = read_cal(&args.table)?;
    let cfg = load_config(&args.config)?;
    let config = cfg.pipeline_config(table);
    let stack = read_stack(&args.r#in)?;
    std::fs::create_dir_all(&args.out).map_err(irpipe::Error::from)?;

    let (displays, _, timing) = run_pipeline(&config, &stack, None)?;
    match args.emit {
        EmitArg::Pgm8 => {
            for (i, display) in displays.iter().enumerate() {
                let frame = display_to_raw8(display, stack.frames()[i].fpa_temp_c())?;
                write_pgm(args.out.join(format!("frame_{i:04}.pgm")), &frame)?;
            }
        }
        EmitArg::Tir => {
            let frames = displays
                .iter()
                .zip(stack.frames())
                .map(|(d, raw)| display_to_raw8(d, raw.fpa_temp_c()))
                .collect::<Result<Vec<_>, _>>()?;
            let corrected = FrameStack::new(frames, "corrected")?;
            write_container(args.out.join("corrected.tir"), &corrected)?;
        }
    }
    print_timing(&timing);
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.simulator.seed = seed;
    }
    let model = cfg.noise_model()?;
    let sim = &cfg.simulator;
    let scene = Scene::flat(sim.width, sim.height, sim.scene_temp_c)?;
    let stack = simulate_stack(&scene, &model, sim.fpa_temp_c, 0, args.frames, "simulated")?;
    write_container(&args.out, &stack)?;
    println!(
        "wrote {} frames ({}x{}, seed {}) to {}",
        args.frames,
        sim.width,
        sim.height,
        sim.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let mut opts = cfg.sweep.options;
    if let Some(repeats) = args.repeats {
        opts.repeats = repeats;
    }
    if let Some(seed) = args.master_seed {
        opts.master_seed = seed;
    }
    thread_cap(&mut opts)?;

    let model = cfg.noise_model()?;
    let setpoints = match &args.setpoints {
        Some(spec) => parse_setpoints(cfg.mode, spec)?,
        None => default_setpoints(cfg.mode),
    };

    let report: SweepReport = match args.kind {
        KindArg::Temperature => sweep_calibration_temperature(
            &model,
            &setpoints,
            &cfg.sweep.ambients,
            &cfg.sweep.eval,
            cfg.sweep.frames_per_ref,
            &opts,
        )?,
        KindArg::Powerset | KindArg::Tonemap => {
            let (cold, hot, ref2) =
                generate_calibration_set(&model, &setpoints, cfg.sweep.frames_per_ref)?;
            let table: CalibrationTable = match cfg.mode {
                CalMode::Shutter => calibrate_shutter(&cold, &hot, &setpoints)?,
                CalMode::Shutterless => {
                    let ref2 = ref2.expect("shutterless calibration set has a second ambient");
                    calibrate_shutterless(&cold, &hot, &ref2, &setpoints)?
                }
            };
            let base = cfg.pipeline_config(table);
            let sim = &cfg.simulator;
            let scene = Scene::flat(sim.width, sim.height, sim.scene_temp_c)?;
            // Evaluation frames start at index 1000 so their temporal noise
            // never reuses the calibration references' draws.
            let stack =
                simulate_stack(&scene, &model, sim.fpa_temp_c, 1000, cfg.sweep.frames, "eval")?;
            let pristine = NoiseModelParams {
                flux_per_degree: sim.params.flux_per_degree,
                ..NoiseModelParams::ideal()
            };
            let ideal = build_noise_model(sim.seed, sim.width, sim.height, pristine)?;
            let clean =
                simulate_stack(&scene, &ideal, sim.fpa_temp_c, 1000, cfg.sweep.frames, "clean")?;
            match args.kind {
                KindArg::Powerset => sweep_stage_powerset(&base, &stack, &clean, &opts)?,
                _ => sweep_tonemap(&base, &stack, &TonemapAlgorithm::ALL, &opts)?,
            }
        }
    };

    write_csv(&args.out, &report)?;
    if let Some(svg) = &args.svg {
        write_svg(svg, &report)?;
    }
    println!("{} rows -> {}", report.rows.len(), args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.frames == 0 {
        return Err(usage("--frames must be at least 1"));
    }
    let table = read_cal(&args.table)?;
    let cfg = load_config(&args.config)?;
    let config = cfg.pipeline_config(table);
    let stack = read_stack(&args.r#in)?;
    let frames: Vec<RawFrame> = stack
        .frames()
        .iter()
        .cycle()
        .take(args.frames)
        .cloned()
        .collect();
    let bench_stack = FrameStack::new(frames, "bench")?;
    let (_, _, timing) = run_pipeline(&config, &bench_stack, None)?;
    println!("host: {}", timing.host);
    println!("frames: {}", timing.frame_count);
    print_timing(&timing);
    Ok(())
}
