//! Plain-text configuration files: `key = value` lines under `[section]`
//! headers, `#` comments, UTF-8. Parsing is total: every line either lands in
//! a typed field or fails with its line number. Unknown sections and keys are
//! rejected so typos never pass silently.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nuc::{CalMode, CalibrationTable};
use crate::pipeline::{EvalSpec, PipelineConfig, StageParams, StageToggles, SweepOptions};
use crate::sim::{build_noise_model, FlareBlob, NoiseModel, NoiseModelParams};
use crate::stages::SpatialDenoiseParams;
use crate::tonemap::{TonemapAlgorithm, TonemapSpec};

/// `[simulator]` section: model parameters plus the scene rendered by the
/// simulate command.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorConfig {
    pub seed: u64,
    pub width: u16,
    pub height: u16,
    pub params: NoiseModelParams,
    pub scene_temp_c: f64,
    pub fpa_temp_c: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            width: 320,
            height: 240,
            params: NoiseModelParams::default(),
            scene_temp_c: 25.0,
            fpa_temp_c: 25.0,
        }
    }
}

/// `[sweep]` section: execution options plus sweep-specific inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub options: SweepOptions,
    /// Calibration ambients for the temperature sweep.
    pub ambients: Vec<f64>,
    pub frames_per_ref: usize,
    pub eval: EvalSpec,
    /// Frames rendered per repeat for power-set and tonemap sweeps.
    pub frames: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            options: SweepOptions::default(),
            ambients: (0..9).map(|i| 10.0 + 5.0 * i as f64).collect(),
            frames_per_ref: 8,
            eval: EvalSpec::default(),
            frames: 10,
        }
    }
}

/// Everything a configuration file can express, pre-typed with defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileConfig {
    pub simulator: SimulatorConfig,
    pub mode: CalMode,
    pub toggles: StageToggles,
    pub stage_params: StageParams,
    pub tonemap: TonemapSpec,
    pub sweep: SweepConfig,
}

impl FileConfig {
    /// Builds the simulator's noise model from the `[simulator]` section.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        build_noise_model(
            self.simulator.seed,
            self.simulator.width,
            self.simulator.height,
            self.simulator.params,
        )
    }

    /// Assembles a pipeline configuration around a loaded calibration table.
    pub fn pipeline_config(&self, table: CalibrationTable) -> PipelineConfig {
        PipelineConfig {
            mode: self.mode,
            table,
            toggles: self.toggles,
            params: self.stage_params.clone(),
            tonemap: self.tonemap.clone(),
        }
    }
}

/// State the parser needs beyond FileConfig: pieces assembled after all
/// lines are read (SDN method selection, optional flare blob).
struct ParseState {
    config: FileConfig,
    sdn_method: SdnMethod,
    bilateral: (f64, f64),
    nlm: (usize, usize, f64),
    flare_amplitude: Option<f64>,
    flare_sigma: Option<f64>,
    flare_center_x: Option<f64>,
    flare_center_y: Option<f64>,
}

#[derive(PartialEq, Clone, Copy)]
enum SdnMethod {
    Bilateral,
    Nlm,
}

fn bad_line(line: usize, what: impl std::fmt::Display) -> Error {
    Error::ConfigInvalid(format!("line {line}: {what}"))
}

fn typed<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse()
        .map_err(|_| bad_line(line, format!("invalid value {raw:?} for key {key}")))
}

fn typed_bool(key: &str, raw: &str, line: usize) -> Result<bool> {
    match raw {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(bad_line(
            line,
            format!("invalid value {raw:?} for key {key} (expected 0/1/true/false)"),
        )),
    }
}

fn typed_list(key: &str, raw: &str, line: usize) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|part| typed(key, part.trim(), line))
        .collect()
}

/// Parses configuration text; see the module docs for the grammar. Every key
/// belongs to exactly one section; the full key table is in the README.
pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut state = ParseState {
        config: FileConfig::default(),
        sdn_method: SdnMethod::Bilateral,
        bilateral: (3.0, 60.0),
        nlm: (3, 10, 40.0),
        flare_amplitude: None,
        flare_sigma: None,
        flare_center_x: None,
        flare_center_y: None,
    };
    let mut section: Option<String> = None;

    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad_line(line, "unterminated section header"))?
                .trim();
            const SECTIONS: [&str; 9] = [
                "simulator",
                "pipeline",
                "stages.destrip",
                "stages.bpr",
                "stages.sdn",
                "stages.tdn",
                "stages.flare",
                "tonemap",
                "sweep",
            ];
            if !SECTIONS.contains(&name) {
                return Err(bad_line(line, format!("unknown section [{name}]")));
            }
            section = Some(name.to_owned());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| bad_line(line, format!("expected key = value, got {content:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let section = section
            .as_deref()
            .ok_or_else(|| bad_line(line, format!("key {key} appears before any [section]")))?;
        apply_key(&mut state, section, key, value, line)?;
    }

    let c = &mut state.config;
    c.stage_params.sdn = match state.sdn_method {
        SdnMethod::Bilateral => SpatialDenoiseParams::Bilateral {
            sigma_spatial: state.bilateral.0,
            sigma_range: state.bilateral.1,
        },
        SdnMethod::Nlm => SpatialDenoiseParams::Nlm {
            patch_radius: state.nlm.0,
            search_radius: state.nlm.1,
            h: state.nlm.2,
        },
    };
    match state.flare_amplitude {
        None => {}
        Some(a) if a == 0.0 => {}
        Some(amplitude) => {
            let sigma = state.flare_sigma.ok_or_else(|| {
                Error::ConfigInvalid(
                    "flare_sigma is required when flare_amplitude is set".to_owned(),
                )
            })?;
            c.simulator.params.flare = Some(FlareBlob {
                center_x: state
                    .flare_center_x
                    .unwrap_or((c.simulator.width as f64 - 1.0) / 2.0),
                center_y: state
                    .flare_center_y
                    .unwrap_or((c.simulator.height as f64 - 1.0) / 2.0),
                sigma,
                amplitude,
            });
        }
    }
    Ok(state.config)
}

fn apply_key(
    state: &mut ParseState,
    section: &str,
    key: &str,
    value: &str,
    line: usize,
) -> Result<()> {
    let c = &mut state.config;
    match (section, key) {
        ("simulator", "seed") => c.simulator.seed = typed(key, value, line)?,
        ("simulator", "width") => c.simulator.width = typed(key, value, line)?,
        ("simulator", "height") => c.simulator.height = typed(key, value, line)?,
        ("simulator", "flux_per_degree") => {
            c.simulator.params.flux_per_degree = typed(key, value, line)?
        }
        ("simulator", "sigma_gain") => c.simulator.params.sigma_gain = typed(key, value, line)?,
        ("simulator", "sigma_offset") => {
            c.simulator.params.sigma_offset = typed(key, value, line)?
        }
        ("simulator", "sigma_drift") => c.simulator.params.sigma_drift = typed(key, value, line)?,
        ("simulator", "sigma_stripe") => {
            c.simulator.params.sigma_stripe = typed(key, value, line)?
        }
        ("simulator", "bad_fraction") => {
            c.simulator.params.bad_fraction = typed(key, value, line)?
        }
        ("simulator", "temporal_sigma") => {
            c.simulator.params.temporal_sigma = typed(key, value, line)?
        }
        ("simulator", "scene_temp_c") => c.simulator.scene_temp_c = typed(key, value, line)?,
        ("simulator", "fpa_temp_c") => c.simulator.fpa_temp_c = typed(key, value, line)?,
        ("simulator", "flare_amplitude") => {
            state.flare_amplitude = Some(typed(key, value, line)?)
        }
        ("simulator", "flare_sigma") => state.flare_sigma = Some(typed(key, value, line)?),
        ("simulator", "flare_center_x") => {
            state.flare_center_x = Some(typed(key, value, line)?)
        }
        ("simulator", "flare_center_y") => {
            state.flare_center_y = Some(typed(key, value, line)?)
        }
        ("pipeline", "mode") => {
            c.mode = match value {
                "shutter" => CalMode::Shutter,
                "shutterless" => CalMode::Shutterless,
                _ => return Err(bad_line(line, format!("unknown mode {value:?}"))),
            }
        }
        ("pipeline", "destrip") => c.toggles.destrip = typed_bool(key, value, line)?,
        ("pipeline", "bpr") => c.toggles.bpr = typed_bool(key, value, line)?,
        ("pipeline", "sdn") => c.toggles.sdn = typed_bool(key, value, line)?,
        ("pipeline", "tdn") => c.toggles.tdn = typed_bool(key, value, line)?,
        ("pipeline", "flare") => c.toggles.flare = typed_bool(key, value, line)?,
        ("stages.destrip", "smooth_window") => {
            c.stage_params.destrip.smooth_window = typed(key, value, line)?
        }
        ("stages.sdn", "method") => {
            state.sdn_method = match value {
                "bilateral" => SdnMethod::Bilateral,
                "nlm" => SdnMethod::Nlm,
                _ => return Err(bad_line(line, format!("unknown sdn method {value:?}"))),
            }
        }
        ("stages.sdn", "sigma_spatial") => state.bilateral.0 = typed(key, value, line)?,
        ("stages.sdn", "sigma_range") => state.bilateral.1 = typed(key, value, line)?,
        ("stages.sdn", "patch_radius") => state.nlm.0 = typed(key, value, line)?,
        ("stages.sdn", "search_radius") => state.nlm.1 = typed(key, value, line)?,
        ("stages.sdn", "h") => state.nlm.2 = typed(key, value, line)?,
        ("stages.tdn", "block") => c.stage_params.tdn.block = typed(key, value, line)?,
        ("stages.tdn", "search_radius") => {
            c.stage_params.tdn.search_radius = typed(key, value, line)?
        }
        ("stages.tdn", "blend_alpha") => {
            c.stage_params.tdn.blend_alpha = typed(key, value, line)?
        }
        ("stages.tdn", "sad_reject") => c.stage_params.tdn.sad_reject = typed(key, value, line)?,
        ("stages.flare", "background_sigma") => {
            c.stage_params.flare.background_sigma = Some(typed(key, value, line)?)
        }
        ("stages.flare", "max_removal_fraction") => {
            c.stage_params.flare.max_removal_fraction = typed(key, value, line)?
        }
        ("tonemap", "algorithm") => {
            c.tonemap.algorithm = TonemapAlgorithm::from_str(value)
                .map_err(|e| bad_line(line, e))?
        }
        ("tonemap", "lo") => c.tonemap.lo = Some(typed(key, value, line)?),
        ("tonemap", "hi") => c.tonemap.hi = Some(typed(key, value, line)?),
        ("tonemap", "clahe_tiles_x") => c.tonemap.clahe_tiles_x = typed(key, value, line)?,
        ("tonemap", "clahe_tiles_y") => c.tonemap.clahe_tiles_y = typed(key, value, line)?,
        ("tonemap", "clahe_clip_limit") => {
            c.tonemap.clahe_clip_limit = typed(key, value, line)?
        }
        ("tonemap", "knee_p1") => c.tonemap.knee_percentiles[0] = typed(key, value, line)?,
        ("tonemap", "knee_p2") => c.tonemap.knee_percentiles[1] = typed(key, value, line)?,
        ("tonemap", "knee_p3") => c.tonemap.knee_percentiles[2] = typed(key, value, line)?,
        ("tonemap", "knee_o1") => c.tonemap.knee_outputs[0] = typed(key, value, line)?,
        ("tonemap", "knee_o2") => c.tonemap.knee_outputs[1] = typed(key, value, line)?,
        ("tonemap", "knee_o3") => c.tonemap.knee_outputs[2] = typed(key, value, line)?,
        ("tonemap", "pct_lo") => c.tonemap.percentile_clip.0 = typed(key, value, line)?,
        ("tonemap", "pct_hi") => c.tonemap.percentile_clip.1 = typed(key, value, line)?,
        ("tonemap", "target_median") => c.tonemap.target_median = typed(key, value, line)?,
        ("tonemap", "plateau") => c.tonemap.plateau = typed(key, value, line)?,
        ("sweep", "repeats") => c.sweep.options.repeats = typed(key, value, line)?,
        ("sweep", "master_seed") => c.sweep.options.master_seed = typed(key, value, line)?,
        ("sweep", "workers") => c.sweep.options.workers = typed(key, value, line)?,
        ("sweep", "jitter_sigma") => c.sweep.options.jitter_sigma = typed(key, value, line)?,
        ("sweep", "ambients") => c.sweep.ambients = typed_list(key, value, line)?,
        ("sweep", "frames_per_ref") => c.sweep.frames_per_ref = typed(key, value, line)?,
        ("sweep", "frames") => c.sweep.frames = typed(key, value, line)?,
        ("sweep", "eval_scene_c") => c.sweep.eval.scene_temp_c = typed(key, value, line)?,
        ("sweep", "eval_grid") => c.sweep.eval.grid_c = typed_list(key, value, line)?,
        ("sweep", "eval_frames") => c.sweep.eval.frames_per_point = typed(key, value, line)?,
        _ => {
            return Err(bad_line(
                line,
                format!("unknown key {key} in section [{section}]"),
            ))
        }
    }
    Ok(())
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
