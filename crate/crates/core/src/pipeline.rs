//! Pipeline assembly and the two experiment harnesses.
//!
//! A pipeline runs each frame through the fixed stage order
//! NUC -> BPR -> destrip -> SDN -> TDN -> flare -> tonemap, with per-stage
//! wall timing and quality metrics measured on the pre-tonemap frames. The
//! sweep drivers reproduce the benchmark structure used throughout: stage
//! power-set ablations, calibration-temperature sweeps, and tonemap surveys.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frame::{DisplayFrame, FrameStack, RawFrame};
use crate::metrics::{clipped_fraction, display_entropy, quality_metrics, QualityMetrics};
use crate::nuc::{
    apply_nuc, calibrate_shutter, calibrate_shutterless, CalMode, CalibrationSetpoints,
    CalibrationTable,
};
use crate::sim::{generate_calibration_set, simulate_stack, NoiseModel, Scene};
use crate::stages::{
    destripe, flare_correct, replace_bad_pixels, spatial_denoise, temporal_denoise, BprParams,
    DestripeParams, FlareParams, SpatialDenoiseParams, TdnState, TemporalDenoiseParams,
};
use crate::tonemap::{tonemap, TonemapSpec};

/// Stage slots in execution order; timing reports index into this list.
pub const STAGE_NAMES: [&str; 7] = ["nuc", "bpr", "destrip", "sdn", "tdn", "flare", "tonemap"];

/// On/off switches for the optional stages (NUC and tonemap always run).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageToggles {
    pub destrip: bool,
    pub bpr: bool,
    pub sdn: bool,
    pub tdn: bool,
    pub flare: bool,
}

impl StageToggles {
    /// Decodes a power-set row index: destrip is the least-significant bit,
    /// then bpr, sdn, tdn, and (shutterless only) flare.
    pub fn from_bits(bits: usize) -> Self {
        Self {
            destrip: bits & 1 != 0,
            bpr: bits & 2 != 0,
            sdn: bits & 4 != 0,
            tdn: bits & 8 != 0,
            flare: bits & 16 != 0,
        }
    }

    /// Row label: enabled flag names joined with `+`, or `baseline`.
    pub fn label(&self) -> String {
        let names = [
            (self.destrip, "destrip"),
            (self.bpr, "bpr"),
            (self.sdn, "sdn"),
            (self.tdn, "tdn"),
            (self.flare, "flare"),
        ];
        let enabled: Vec<&str> = names.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect();
        if enabled.is_empty() {
            "baseline".to_owned()
        } else {
            enabled.join("+")
        }
    }
}

/// Parameters for every optional stage, defaulted from the stages module.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageParams {
    pub destrip: DestripeParams,
    pub bpr: BprParams,
    pub sdn: SpatialDenoiseParams,
    pub tdn: TemporalDenoiseParams,
    pub flare: FlareParams,
}

/// Complete pipeline configuration around an in-memory calibration table.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: CalMode,
    pub table: CalibrationTable,
    pub toggles: StageToggles,
    pub params: StageParams,
    pub tonemap: TonemapSpec,
}

impl PipelineConfig {
    /// Baseline configuration (NUC + tonemap only) for the table's mode.
    pub fn new(table: CalibrationTable) -> Self {
        Self {
            mode: table.mode,
            table,
            toggles: StageToggles::default(),
            params: StageParams::default(),
            tonemap: TonemapSpec::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mode != self.table.mode {
            return Err(Error::ConfigInvalid(format!(
                "pipeline mode {:?} but the calibration table is {:?}",
                self.mode, self.table.mode
            )));
        }
        if self.toggles.flare && self.mode != CalMode::Shutterless {
            return Err(Error::ConfigInvalid(
                "flare correction is only valid in shutterless mode".to_owned(),
            ));
        }
        Ok(())
    }

    /// Number of optional stage flags this mode sweeps over.
    fn flag_count(&self) -> usize {
        match self.mode {
            CalMode::Shutter => 4,
            CalMode::Shutterless => 5,
        }
    }
}

/// Wall-time statistics for one stage slot, in milliseconds per frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTiming {
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Per-stage and whole-frame wall times over one run.
///
/// The whole-frame total is measured by its own clock around the full chain,
/// so it is at least the sum of stage means up to measurement slack
/// (documented 5%). Reference points from comparable pipelines, for
/// documentation only and never asserted: a shutter baseline around 2 ms per
/// frame, a shutterless baseline around 32 ms, destriping adding 10-11 ms,
/// flare correction around 8 ms, and temporal denoising 1-2 ms; such figures
/// are hardware-specific.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub stages: [StageTiming; 7],
    pub total_mean_ms: f64,
    pub frame_count: usize,
    pub host: String,
}

impl TimingReport {
    /// Pools two reports frame-count-weighted; both must describe the same
    /// stage configuration for the per-stage statistics to stay meaningful.
    fn merge(&self, other: &TimingReport) -> TimingReport {
        let (na, nb) = (self.frame_count as f64, other.frame_count as f64);
        let mut stages = [StageTiming::default(); 7];
        for (i, s) in stages.iter_mut().enumerate() {
            let (a, b) = (self.stages[i], other.stages[i]);
            s.mean_ms = (a.mean_ms * na + b.mean_ms * nb) / (na + nb);
            s.min_ms = a.min_ms.min(b.min_ms);
            s.max_ms = a.max_ms.max(b.max_ms);
        }
        TimingReport {
            stages,
            total_mean_ms: (self.total_mean_ms * na + other.total_mean_ms * nb) / (na + nb),
            frame_count: self.frame_count + other.frame_count,
            host: self.host.clone(),
        }
    }
}

fn host_descriptor() -> String {
    format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS)
}

/// Per-stage accumulator building a TimingReport.
struct TimingAcc {
    sum: [f64; 7],
    min: [f64; 7],
    max: [f64; 7],
    counted: [usize; 7],
    total_sum: f64,
    frames: usize,
}

impl TimingAcc {
    fn new() -> Self {
        Self {
            sum: [0.0; 7],
            min: [f64::INFINITY; 7],
            max: [0.0; 7],
            counted: [0; 7],
            total_sum: 0.0,
            frames: 0,
        }
    }

    fn record(&mut self, slot: usize, started: Instant) {
        let ms = started.elapsed().as_secs_f64() * 1e3;
        self.sum[slot] += ms;
        self.min[slot] = self.min[slot].min(ms);
        self.max[slot] = self.max[slot].max(ms);
        self.counted[slot] += 1;
    }

    fn finish(self) -> TimingReport {
        let mut stages = [StageTiming::default(); 7];
        for (i, s) in stages.iter_mut().enumerate() {
            if self.counted[i] > 0 {
                s.mean_ms = self.sum[i] / self.counted[i] as f64;
                s.min_ms = self.min[i];
                s.max_ms = self.max[i];
            }
        }
        TimingReport {
            stages,
            total_mean_ms: self.total_sum / self.frames.max(1) as f64,
            frame_count: self.frames,
            host: host_descriptor(),
        }
    }
}

/// Runs a stack through the configured chain.
///
/// Returns the display frames, per-frame quality metrics measured on the
/// pre-tonemap corrected frames (PSNR against `clean` when provided), and the
/// timing report. TDN state threads across the stack in order.
pub fn run_pipeline(
    config: &PipelineConfig,
    stack: &FrameStack,
    clean: Option<&FrameStack>,
) -> Result<(Vec<DisplayFrame>, Vec<QualityMetrics>, TimingReport)> {
    config.validate()?;
    if let Some(c) = clean {
        if c.len() != stack.len() {
            return Err(Error::DimensionMismatch(format!(
                "clean stack holds {} frames, input {}",
                c.len(),
                stack.len()
            )));
        }
    }
    let mut timing = TimingAcc::new();
    let mut displays = Vec::with_capacity(stack.len());
    let mut metrics = Vec::with_capacity(stack.len());
    let mut tdn_state = TdnState::new(config.params.tdn.clone());

    for (i, frame) in stack.frames().iter().enumerate() {
        let frame_started = Instant::now();

        let t = Instant::now();
        let mut current = apply_nuc(frame, &config.table)?;
        timing.record(0, t);

        if config.toggles.bpr {
            let t = Instant::now();
            current = replace_bad_pixels(&current, &config.table.bad_pixels, &config.params.bpr)?;
            timing.record(1, t);
        }
        if config.toggles.destrip {
            let t = Instant::now();
            current = destripe(&current, &config.params.destrip)?;
            timing.record(2, t);
        }
        if config.toggles.sdn {
            let t = Instant::now();
            current = spatial_denoise(&current, &config.params.sdn)?;
            timing.record(3, t);
        }
        if config.toggles.tdn {
            let t = Instant::now();
            let (out, next) = temporal_denoise(tdn_state, &current, &config.params.tdn)?;
            current = out;
            tdn_state = next;
            timing.record(4, t);
        }
        if config.toggles.flare {
            let t = Instant::now();
            current = flare_correct(&current, &config.params.flare)?;
            timing.record(5, t);
        }

        metrics.push(quality_metrics(
            &current,
            clean.map(|c| &c.frames()[i]),
        )?);

        let t = Instant::now();
        displays.push(tonemap(&current, &config.tonemap)?);
        timing.record(6, t);

        timing.total_sum += frame_started.elapsed().as_secs_f64() * 1e3;
        timing.frames += 1;
    }
    Ok((displays, metrics, timing.finish()))
}

/// How a sweep runs: repeat count, the master seed for repeat noise, and the
/// worker cap (0 = one per available core, 1 = inline execution).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub repeats: usize,
    pub master_seed: u64,
    pub workers: usize,
    /// Std of the extra temporal noise injected on repeats after the first.
    pub jitter_sigma: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            repeats: 5,
            master_seed: 1,
            workers: 0,
            jitter_sigma: 6.0,
        }
    }
}

impl SweepOptions {
    fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(Error::InvalidParam("sweep repeats must be >= 1".to_owned()));
        }
        if !(self.jitter_sigma.is_finite() && self.jitter_sigma >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "jitter sigma {}",
                self.jitter_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    StagePowerset,
    CalibrationTemperature,
    Tonemap,
}

/// Metric means and population stds pooled over every (frame, repeat)
/// observation of one sweep row. PSNR aggregates are absent when any
/// observation lacked a clean reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricAggregate {
    pub rnu_mean: f64,
    pub rnu_std: f64,
    pub psnr_mean: Option<f64>,
    pub psnr_std: Option<f64>,
    pub cni_mean: f64,
    pub cni_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl MetricAggregate {
    fn from_observations(observations: &[QualityMetrics]) -> Self {
        let rnu: Vec<f64> = observations.iter().map(|m| m.rnu_percent).collect();
        let cni: Vec<f64> = observations.iter().map(|m| m.cni).collect();
        let psnr: Option<Vec<f64>> = observations.iter().map(|m| m.psnr_db).collect();
        let (rnu_mean, rnu_std) = mean_std(&rnu);
        let (cni_mean, cni_std) = mean_std(&cni);
        let (psnr_mean, psnr_std) = match psnr {
            Some(p) => {
                let (m, s) = mean_std(&p);
                (Some(m), Some(s))
            }
            None => (None, None),
        };
        Self {
            rnu_mean,
            rnu_std,
            psnr_mean,
            psnr_std,
            cni_mean,
            cni_std,
        }
    }
}

/// One sweep result row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub toggles: StageToggles,
    pub tonemap: String,
    pub metrics: MetricAggregate,
    pub timing: TimingReport,
    /// Axis-specific named values appended as extra CSV columns.
    pub extra: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub repeats: usize,
    pub rows: Vec<SweepRow>,
}

/// Runs `count` independent row jobs, striped across up to `workers` scoped
/// threads (0 = auto, 1 = inline; inline keeps single-threaded targets happy).
fn parallel_rows<T, F>(count: usize, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    }
    .min(count.max(1));
    if workers <= 1 {
        return (0..count).map(job).collect();
    }
    let cells: Vec<std::sync::Mutex<Option<Result<T>>>> =
        (0..count).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for w in 0..workers {
            let job = &job;
            let cells = &cells;
            scope.spawn(move || {
                let mut i = w;
                while i < count {
                    *cells[i].lock().unwrap() = Some(job(i));
                    i += workers;
                }
            });
        }
    });
    cells
        .into_iter()
        .map(|c| c.into_inner().unwrap().expect("every row job ran"))
        .collect()
}

/// The repeat stacks a sweep row sees: repeat 0 is the pristine stack, later
/// repeats add fresh N(0, jitter_sigma) temporal noise drawn from
/// (master_seed, repeat).
fn repeat_stacks(stack: &FrameStack, opts: &SweepOptions) -> Result<Vec<FrameStack>> {
    let mut stacks = Vec::with_capacity(opts.repeats);
    stacks.push(stack.clone());
    for r in 1..opts.repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.master_seed);
        rng.set_stream(r as u64);
        let frames = stack
            .frames()
            .iter()
            .map(|f| {
                let max = f.max_value() as f64;
                let samples: Vec<u16> = f
                    .samples()
                    .iter()
                    .map(|&v| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (v as f64 + opts.jitter_sigma * z).round().clamp(0.0, max) as u16
                    })
                    .collect();
                RawFrame::new(f.width(), f.height(), f.bit_depth(), f.fpa_temp_c(), samples)
            })
            .collect::<Result<Vec<_>>>()?;
        stacks.push(FrameStack::new(frames, stack.source_tag())?);
    }
    Ok(stacks)
}

/// Runs one configuration over every repeat stack and pools the results.
fn run_repeats(
    config: &PipelineConfig,
    stacks: &[FrameStack],
    clean: Option<&FrameStack>,
) -> Result<(Vec<QualityMetrics>, Vec<DisplayFrame>, TimingReport)> {
    let mut observations = Vec::new();
    let mut displays = Vec::new();
    let mut timing: Option<TimingReport> = None;
    for stack in stacks {
        let (d, m, t) = run_pipeline(config, stack, clean)?;
        observations.extend(m);
        displays.extend(d);
        timing = Some(match timing {
            None => t,
            Some(acc) => acc.merge(&t),
        });
    }
    Ok((observations, displays, timing.expect("repeats >= 1")))
}

/// Stage power-set ablation: every on/off combination of the mode's optional
/// stages, in binary-counting order with destrip as the least-significant
/// bit (16 rows shutter, 32 shutterless). Row 0 is the baseline.
pub fn sweep_stage_powerset(
    base: &PipelineConfig,
    stack: &FrameStack,
    clean: &FrameStack,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    base.validate()?;
    opts.validate()?;
    let stacks = repeat_stacks(stack, opts)?;
    let rows = parallel_rows(1 << base.flag_count(), opts.workers, |bits| {
        let mut config = base.clone();
        config.toggles = StageToggles::from_bits(bits);
        let (observations, _, timing) = run_repeats(&config, &stacks, Some(clean))?;
        Ok(SweepRow {
            label: config.toggles.label(),
            toggles: config.toggles,
            tonemap: config.tonemap.algorithm.name().to_owned(),
            metrics: MetricAggregate::from_observations(&observations),
            timing,
            extra: Vec::new(),
        })
    })?;
    Ok(SweepReport {
        axis: SweepAxis::StagePowerset,
        repeats: opts.repeats,
        rows,
    })
}

/// What the calibration-temperature sweep evaluates at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSpec {
    /// Flat-field scene temperature viewed by every evaluation frame.
    pub scene_temp_c: f64,
    /// FPA operating temperatures the corrected sensor is scored at.
    pub grid_c: Vec<f64>,
    pub frames_per_point: usize,
}

impl Default for EvalSpec {
    fn default() -> Self {
        Self {
            scene_temp_c: 25.0,
            grid_c: (0..9).map(|i| 10.0 + 5.0 * i as f64).collect(),
            frames_per_point: 2,
        }
    }
}

/// Calibration-temperature sweep: recalibrates at each ambient in `ambients`
/// (shutterless setpoints keep their ambient delta), corrects flat fields
/// across the FPA grid with NUC + BPR, and reports mean and worst-case RNU
/// per calibration ambient.
pub fn sweep_calibration_temperature(
    model: &NoiseModel,
    base: &CalibrationSetpoints,
    ambients: &[f64],
    eval: &EvalSpec,
    frames_per_ref: usize,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    opts.validate()?;
    if ambients.is_empty() {
        return Err(Error::InvalidParam(
            "calibration ambient list is empty".to_owned(),
        ));
    }
    if eval.grid_c.is_empty() || eval.frames_per_point == 0 {
        return Err(Error::InvalidParam(
            "evaluation grid needs at least one temperature and one frame".to_owned(),
        ));
    }
    let delta = base.t_amb_2_c.map(|t2| t2 - base.t_amb_1_c);
    for &t in ambients {
        let high = t + delta.unwrap_or(0.0);
        if !((-20.0..=60.0).contains(&t) && (-20.0..=60.0).contains(&high)) {
            return Err(Error::InvalidParam(format!(
                "calibration ambient {t} °C outside the setpoint range"
            )));
        }
    }

    let scene = Scene::flat(model.width(), model.height(), eval.scene_temp_c)?;
    let rows = parallel_rows(ambients.len(), opts.workers, |row| {
        let t_amb = ambients[row];
        let setpoints = match base.mode() {
            CalMode::Shutter => CalibrationSetpoints::shutter(
                base.t_scene_cold_c,
                base.t_scene_hot_c,
                t_amb,
            )?,
            CalMode::Shutterless => CalibrationSetpoints::shutterless(
                base.t_scene_cold_c,
                base.t_scene_hot_c,
                t_amb,
                t_amb + delta.expect("shutterless setpoints carry t_amb_2"),
                base.t_scene_3_c.expect("shutterless setpoints carry t_scene_3"),
            )?,
        };
        let (cold, hot, ref_2) = generate_calibration_set(model, &setpoints, frames_per_ref)?;
        let table = match setpoints.mode() {
            CalMode::Shutter => calibrate_shutter(&cold, &hot, &setpoints)?,
            CalMode::Shutterless => {
                calibrate_shutterless(&cold, &hot, &ref_2.expect("shutterless set"), &setpoints)?
            }
        };
        let mut config = PipelineConfig::new(table);
        config.toggles.bpr = true;

        let mut observations = Vec::new();
        let mut timing: Option<TimingReport> = None;
        for repeat in 0..opts.repeats {
            for (gi, &fpa) in eval.grid_c.iter().enumerate() {
                // Unique frame indices per (repeat, grid point) give fresh
                // temporal noise; shared across rows for comparability.
                let first = 1000 + ((repeat * eval.grid_c.len() + gi) * eval.frames_per_point);
                let stack = simulate_stack(
                    &scene,
                    model,
                    fpa,
                    first as u32,
                    eval.frames_per_point,
                    "eval",
                )?;
                let (_, m, t) = run_pipeline(&config, &stack, None)?;
                observations.extend(m);
                timing = Some(match timing {
                    None => t,
                    Some(acc) => acc.merge(&t),
                });
            }
        }
        let worst = observations
            .iter()
            .map(|m| m.rnu_percent)
            .fold(0.0, f64::max);
        Ok(SweepRow {
            label: format!("cal@{t_amb}"),
            toggles: config.toggles,
            tonemap: config.tonemap.algorithm.name().to_owned(),
            metrics: MetricAggregate::from_observations(&observations),
            timing: timing.expect("grid is non-empty"),
            extra: vec![
                ("cal_ambient_c".to_owned(), t_amb),
                ("rnu_worst".to_owned(), worst),
            ],
        })
    })?;
    Ok(SweepReport {
        axis: SweepAxis::CalibrationTemperature,
        repeats: opts.repeats,
        rows,
    })
}

/// Tonemap survey: one row per algorithm, all sharing the base configuration's
/// correction chain and knob values. Corrected-domain metrics are identical
/// across rows by construction; the rows differ in display statistics
/// (entropy, clipped fraction) and tonemap timing.
pub fn sweep_tonemap(
    base: &PipelineConfig,
    stack: &FrameStack,
    algorithms: &[crate::tonemap::TonemapAlgorithm],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    base.validate()?;
    opts.validate()?;
    if algorithms.is_empty() {
        return Err(Error::InvalidParam(
            "tonemap algorithm list is empty".to_owned(),
        ));
    }
    let stacks = repeat_stacks(stack, opts)?;
    let rows = parallel_rows(algorithms.len(), opts.workers, |row| {
        let mut config = base.clone();
        config.tonemap = TonemapSpec {
            algorithm: algorithms[row],
            ..base.tonemap.clone()
        };
        let (observations, displays, timing) = run_repeats(&config, &stacks, None)?;
        let entropy =
            displays.iter().map(display_entropy).sum::<f64>() / displays.len() as f64;
        let clipped =
            displays.iter().map(clipped_fraction).sum::<f64>() / displays.len() as f64;
        Ok(SweepRow {
            label: algorithms[row].name().to_owned(),
            toggles: config.toggles,
            tonemap: algorithms[row].name().to_owned(),
            metrics: MetricAggregate::from_observations(&observations),
            timing,
            extra: vec![
                ("entropy".to_owned(), entropy),
                ("clip_fraction".to_owned(), clipped),
            ],
        })
    })?;
    Ok(SweepReport {
        axis: SweepAxis::Tonemap,
        repeats: opts.repeats,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::DEFAULT_BIT_DEPTH;
    use crate::sim::{build_noise_model, NoiseModelParams};
    use crate::tonemap::TonemapAlgorithm;

    fn constant_stack(value: u16, frames: usize) -> FrameStack {
        let frames = (0..frames)
            .map(|_| RawFrame::new(16, 16, DEFAULT_BIT_DEPTH, 25.0, vec![value; 256]).unwrap())
            .collect();
        FrameStack::new(frames, "test").unwrap()
    }

    fn sim_setup(seed: u64, w: u16, h: u16) -> (NoiseModel, CalibrationTable) {
        let model = build_noise_model(seed, w, h, NoiseModelParams::default()).unwrap();
        let setpoints = CalibrationSetpoints::shutter(10.0, 40.0, 25.0).unwrap();
        let (cold, hot, _) = generate_calibration_set(&model, &setpoints, 4).unwrap();
        let table = calibrate_shutter(&cold, &hot, &setpoints).unwrap();
        (model, table)
    }

    fn quiet_opts(repeats: usize) -> SweepOptions {
        SweepOptions {
            repeats,
            master_seed: 9,
            workers: 1,
            jitter_sigma: 6.0,
        }
    }

    #[test]
    fn identity_table_constant_stack_degenerates_cleanly() {
        let table = CalibrationTable::identity(CalMode::Shutter, 16, 16, 25.0);
        let config = PipelineConfig::new(table);
        let stack = constant_stack(5000, 3);
        let (displays, metrics, timing) = run_pipeline(&config, &stack, None).unwrap();
        assert_eq!(displays.len(), 3);
        for d in &displays {
            assert!(d.samples().iter().all(|&v| v == 128));
        }
        for m in &metrics {
            assert_eq!(m.rnu_percent, 0.0);
            assert_eq!(m.cni, 0.0);
        }
        assert_eq!(timing.frame_count, 3);
        let stage_sum: f64 = timing.stages.iter().map(|s| s.mean_ms).sum();
        assert!(timing.total_mean_ms >= stage_sum * 0.95);
    }

    #[test]
    fn stage_off_paths_leave_no_trace() {
        let (model, table) = sim_setup(21, 32, 32);
        let scene = Scene::flat(32, 32, 25.0).unwrap();
        let stack = simulate_stack(&scene, &model, 25.0, 50, 3, "t").unwrap();
        let mut config = PipelineConfig::new(table.clone());
        config.toggles = StageToggles {
            destrip: true,
            sdn: true,
            tdn: true,
            ..StageToggles::default()
        };
        let (displays, _, _) = run_pipeline(&config, &stack, None).unwrap();

        // Hand-composed equivalent of the same chain.
        let mut state = TdnState::new(config.params.tdn.clone());
        for (i, frame) in stack.frames().iter().enumerate() {
            let mut cur = apply_nuc(frame, &table).unwrap();
            cur = destripe(&cur, &config.params.destrip).unwrap();
            cur = spatial_denoise(&cur, &config.params.sdn).unwrap();
            let (out, next) = temporal_denoise(state, &cur, &config.params.tdn).unwrap();
            state = next;
            let display = crate::tonemap::tonemap(&out, &config.tonemap).unwrap();
            assert_eq!(displays[i], display, "frame {i} diverged");
        }
    }

    #[test]
    fn flare_and_mode_mismatches_are_config_errors() {
        let table = CalibrationTable::identity(CalMode::Shutter, 16, 16, 25.0);
        let mut config = PipelineConfig::new(table);
        config.toggles.flare = true;
        let stack = constant_stack(100, 1);
        assert!(matches!(
            run_pipeline(&config, &stack, None),
            Err(Error::ConfigInvalid(_))
        ));
        config.toggles.flare = false;
        config.mode = CalMode::Shutterless;
        assert!(matches!(
            run_pipeline(&config, &stack, None),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn clean_stack_length_is_checked() {
        let table = CalibrationTable::identity(CalMode::Shutter, 16, 16, 25.0);
        let config = PipelineConfig::new(table);
        let stack = constant_stack(100, 3);
        let clean = constant_stack(100, 2);
        assert!(matches!(
            run_pipeline(&config, &stack, Some(&clean)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn powerset_has_sixteen_deterministic_rows_in_shutter_mode() {
        let (model, table) = sim_setup(3, 32, 32);
        let scene = Scene::flat(32, 32, 25.0).unwrap();
        let stack = simulate_stack(&scene, &model, 25.0, 100, 3, "t").unwrap();
        let ideal = build_noise_model(3, 32, 32, NoiseModelParams::ideal()).unwrap();
        let clean = simulate_stack(&scene, &ideal, 25.0, 100, 3, "clean").unwrap();
        let config = PipelineConfig::new(table);
        let opts = quiet_opts(2);
        let a = sweep_stage_powerset(&config, &stack, &clean, &opts).unwrap();
        assert_eq!(a.rows.len(), 16);
        assert_eq!(a.rows[0].label, "baseline");
        assert_eq!(a.rows[1].label, "destrip");
        assert_eq!(a.rows[2].label, "bpr");
        assert_eq!(a.rows[3].label, "destrip+bpr");
        assert_eq!(a.rows[15].label, "destrip+bpr+sdn+tdn");
        let b = sweep_stage_powerset(&config, &stack, &clean, &opts).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.metrics, rb.metrics);
            assert_eq!(ra.label, rb.label);
        }
        // Worker parallelism must not change results.
        let parallel = SweepOptions {
            workers: 4,
            ..opts
        };
        let c = sweep_stage_powerset(&config, &stack, &clean, &parallel).unwrap();
        for (ra, rc) in a.rows.iter().zip(&c.rows) {
            assert_eq!(ra.metrics, rc.metrics);
        }
    }

    #[test]
    fn shutterless_powerset_has_thirty_two_rows() {
        let model = build_noise_model(4, 32, 32, NoiseModelParams::default()).unwrap();
        let setpoints = CalibrationSetpoints::shutterless(10.0, 40.0, 30.0, 35.0, 10.0).unwrap();
        let (cold, hot, ref_2) = generate_calibration_set(&model, &setpoints, 4).unwrap();
        let table = calibrate_shutterless(&cold, &hot, &ref_2.unwrap(), &setpoints).unwrap();
        let scene = Scene::flat(32, 32, 25.0).unwrap();
        let stack = simulate_stack(&scene, &model, 30.0, 100, 2, "t").unwrap();
        let config = PipelineConfig::new(table);
        let report =
            sweep_stage_powerset(&config, &stack, &stack, &quiet_opts(1)).unwrap();
        assert_eq!(report.rows.len(), 32);
        assert_eq!(report.rows[16].label, "flare");
        assert_eq!(report.rows[31].label, "destrip+bpr+sdn+tdn+flare");
    }

    #[test]
    fn temperature_sweep_is_v_shaped_around_the_grid_centroid() {
        let model = build_noise_model(6, 48, 48, NoiseModelParams::default()).unwrap();
        let setpoints = CalibrationSetpoints::shutter(10.0, 40.0, 25.0).unwrap();
        let eval = EvalSpec {
            frames_per_point: 1,
            ..EvalSpec::default()
        };
        let report = sweep_calibration_temperature(
            &model,
            &setpoints,
            &[10.0, 30.0, 50.0],
            &eval,
            4,
            &quiet_opts(1),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 3);
        let worst: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r.extra.iter().find(|(k, _)| k == "rnu_worst").unwrap().1)
            .collect();
        assert!(worst[1] < worst[0], "centroid {} vs low {}", worst[1], worst[0]);
        assert!(worst[1] < worst[2], "centroid {} vs high {}", worst[1], worst[2]);
        assert_eq!(report.rows[0].extra[0], ("cal_ambient_c".to_owned(), 10.0));
    }

    #[test]
    fn drift_free_modes_agree() {
        let params = NoiseModelParams {
            sigma_drift: 0.0,
            temporal_sigma: 1.0,
            ..NoiseModelParams::default()
        };
        let model = build_noise_model(8, 32, 32, params).unwrap();
        let eval = EvalSpec {
            frames_per_point: 1,
            ..EvalSpec::default()
        };
        let shutter = CalibrationSetpoints::shutter(10.0, 40.0, 25.0).unwrap();
        let shutterless = CalibrationSetpoints::shutterless(10.0, 40.0, 25.0, 30.0, 10.0).unwrap();
        let opts = quiet_opts(1);
        let a =
            sweep_calibration_temperature(&model, &shutter, &[20.0, 35.0], &eval, 16, &opts)
                .unwrap();
        let b = sweep_calibration_temperature(
            &model,
            &shutterless,
            &[20.0, 35.0],
            &eval,
            16,
            &opts,
        )
        .unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!(
                (ra.metrics.rnu_mean - rb.metrics.rnu_mean).abs() < 0.1,
                "mean rnu {} vs {}",
                ra.metrics.rnu_mean,
                rb.metrics.rnu_mean
            );
        }
    }

    #[test]
    fn tonemap_sweep_surveys_each_algorithm_once() {
        let (model, table) = sim_setup(12, 32, 32);
        let scene = Scene::flat(32, 32, 25.0).unwrap();
        let stack = simulate_stack(&scene, &model, 25.0, 10, 2, "t").unwrap();
        let config = PipelineConfig::new(table);
        let report = sweep_tonemap(
            &config,
            &stack,
            &TonemapAlgorithm::ALL,
            &quiet_opts(1),
        )
        .unwrap();
        assert_eq!(report.rows.len(), 9);
        for rows in report.rows.windows(2) {
            // Corrected-domain metrics are identical across rows.
            assert_eq!(rows[0].metrics, rows[1].metrics);
        }
        assert!(report.rows.iter().any(|r| r.label == "clahe"));
    }

    #[test]
    fn constant_stack_has_zero_entropy_in_every_tonemap_row() {
        let table = CalibrationTable::identity(CalMode::Shutter, 16, 16, 25.0);
        let config = PipelineConfig::new(table);
        let stack = constant_stack(3000, 2);
        let report = sweep_tonemap(
            &config,
            &stack,
            &TonemapAlgorithm::ALL,
            &SweepOptions {
                repeats: 1,
                ..quiet_opts(1)
            },
        )
        .unwrap();
        for row in &report.rows {
            let entropy = row.extra.iter().find(|(k, _)| k == "entropy").unwrap().1;
            assert_eq!(entropy, 0.0, "{} leaked entropy", row.label);
        }
    }

    #[test]
    fn std3_and_derived_minmax_rows_match() {
        let (model, table) = sim_setup(14, 32, 32);
        let scene = Scene::flat(32, 32, 25.0).unwrap();
        let stack = simulate_stack(&scene, &model, 25.0, 10, 1, "t").unwrap();
        let mut config = PipelineConfig::new(table.clone());
        // Derive the minmax bounds from the corrected frame's statistics.
        let corrected = apply_nuc(&stack.frames()[0], &table).unwrap();
        let stats = crate::frame::frame_stats(&corrected);
        config.tonemap.lo = Some(stats.mean - 3.0 * stats.std);
        config.tonemap.hi = Some(stats.mean + 3.0 * stats.std);
        let report = sweep_tonemap(
            &config,
            &stack,
            &[TonemapAlgorithm::Std3, TonemapAlgorithm::Minmax],
            &quiet_opts(1),
        )
        .unwrap();
        assert_eq!(report.rows[0].extra, report.rows[1].extra);
    }

    #[test]
    fn sweep_options_are_validated() {
        let table = CalibrationTable::identity(CalMode::Shutter, 16, 16, 25.0);
        let config = PipelineConfig::new(table);
        let stack = constant_stack(100, 1);
        let bad = SweepOptions {
            repeats: 0,
            ..SweepOptions::default()
        };
        assert!(sweep_stage_powerset(&config, &stack, &stack, &bad).is_err());
        assert!(sweep_tonemap(&config, &stack, &[], &quiet_opts(1)).is_err());
        let model = build_noise_model(1, 16, 16, NoiseModelParams::ideal()).unwrap();
        let setpoints = CalibrationSetpoints::shutter(10.0, 40.0, 25.0).unwrap();
        assert!(sweep_calibration_temperature(
            &model,
            &setpoints,
            &[],
            &EvalSpec::default(),
            4,
            &quiet_opts(1)
        )
        .is_err());
        assert!(sweep_calibration_temperature(
            &model,
            &setpoints,
            &[75.0],
            &EvalSpec::default(),
            4,
            &quiet_opts(1)
        )
        .is_err());
    }
}
