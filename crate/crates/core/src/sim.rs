//! Forward sensor model: renders raw frames from clean scenes through a
//! seeded per-pixel noise model, and generates calibration reference stacks.
//!
//! The model is the ground-truth oracle for the correction stages: every
//! field it draws (gain, offset, drift, stripes, defects) is retained and
//! exposed so tests can score corrections against what was actually injected.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::frame::{max_sample, FrameStack, RawFrame, DEFAULT_BIT_DEPTH, MIN_DIMENSION};
use crate::nuc::{BadPixelMap, CalibrationSetpoints, CalMode};

/// FPA temperature (°C) at which the drift field contributes nothing.
pub const SIM_T_REF_C: f64 = 25.0;

/// Optional lens-flare blob added to every rendered frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlareBlob {
    pub center_x: f64,
    pub center_y: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

/// Noise-model parameters; `Default` gives the standard full-noise sensor.
///
/// Flux is linear in scene temperature: a pixel viewing T °C receives
/// flux_per_degree·T sample units before its own gain/offset distortions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModelParams {
    pub flux_per_degree: f64,
    pub sigma_gain: f64,
    pub sigma_offset: f64,
    pub sigma_drift: f64,
    pub sigma_stripe: f64,
    pub bad_fraction: f64,
    pub temporal_sigma: f64,
    pub flare: Option<FlareBlob>,
}

impl Default for NoiseModelParams {
    fn default() -> Self {
        Self {
            flux_per_degree: 100.0,
            sigma_gain: 0.03,
            sigma_offset: 200.0,
            sigma_drift: 8.0,
            sigma_stripe: 20.0,
            bad_fraction: 0.001,
            temporal_sigma: 6.0,
            flare: None,
        }
    }
}

impl NoiseModelParams {
    /// Noiseless, defect-free sensor: gain 1, offset 0, no drift or stripes.
    pub fn ideal() -> Self {
        Self {
            sigma_gain: 0.0,
            sigma_offset: 0.0,
            sigma_drift: 0.0,
            sigma_stripe: 0.0,
            bad_fraction: 0.0,
            temporal_sigma: 0.0,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let sigmas = [
            ("sigma_gain", self.sigma_gain),
            ("sigma_offset", self.sigma_offset),
            ("sigma_drift", self.sigma_drift),
            ("sigma_stripe", self.sigma_stripe),
            ("temporal_sigma", self.temporal_sigma),
        ];
        for (name, s) in sigmas {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidParam(format!("{name} = {s}")));
            }
        }
        if !(self.flux_per_degree.is_finite() && self.flux_per_degree > 0.0) {
            return Err(Error::InvalidParam(format!(
                "flux_per_degree = {}",
                self.flux_per_degree
            )));
        }
        if !(self.bad_fraction >= 0.0 && self.bad_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "bad_fraction = {}",
                self.bad_fraction
            )));
        }
        if let Some(f) = self.flare {
            if !(f.sigma > 0.0 && f.sigma.is_finite() && f.amplitude.is_finite()) {
                return Err(Error::InvalidParam(format!(
                    "flare sigma {} / amplitude {}",
                    f.sigma, f.amplitude
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth sensor: every per-pixel field drawn once from the seed.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    seed: u64,
    width: u16,
    height: u16,
    params: NoiseModelParams,
    gain: Vec<f64>,
    offset: Vec<f64>,
    drift: Vec<f64>,
    stripe: Vec<f64>,
    dead: Vec<usize>,
    hot: Vec<usize>,
}

/// Draws all noise fields from a single seeded generator in a fixed order
/// (gain, offset, drift, stripe, defect placement), so the same seed and
/// dimensions reproduce the same sensor. A zero sigma still consumes its
/// draws, which keeps the other fields stable when one source is switched off.
pub fn build_noise_model(
    seed: u64,
    width: u16,
    height: u16,
    params: NoiseModelParams,
) -> Result<NoiseModel> {
    params.validate()?;
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(Error::DimensionMismatch(format!(
            "noise model {width}x{height} below the {MIN_DIMENSION}-pixel minimum"
        )));
    }
    let n = width as usize * height as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = |count: usize, mean: f64, sigma: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..count)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                mean + sigma * z
            })
            .collect()
    };
    let gain: Vec<f64> = field(n, 1.0, params.sigma_gain, &mut rng)
        .into_iter()
        .map(|g| g.max(0.01))
        .collect();
    let offset = field(n, 0.0, params.sigma_offset, &mut rng);
    let drift = field(n, 0.0, params.sigma_drift, &mut rng);
    let stripe = field(width as usize, 0.0, params.sigma_stripe, &mut rng);

    let bad_count = (params.bad_fraction * n as f64).round() as usize;
    let mut chosen = rand::seq::index::sample(&mut rng, n, bad_count).into_vec();
    chosen.sort_unstable();
    let (mut dead, mut hot) = (Vec::new(), Vec::new());
    for (rank, idx) in chosen.into_iter().enumerate() {
        if rank % 2 == 0 {
            dead.push(idx);
        } else {
            hot.push(idx);
        }
    }

    Ok(NoiseModel {
        seed,
        width,
        height,
        params,
        gain,
        offset,
        drift,
        stripe,
        dead,
        hot,
    })
}

impl NoiseModel {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn params(&self) -> &NoiseModelParams {
        &self.params
    }

    pub fn gain_field(&self) -> &[f64] {
        &self.gain
    }

    pub fn offset_field(&self) -> &[f64] {
        &self.offset
    }

    pub fn drift_field(&self) -> &[f64] {
        &self.drift
    }

    pub fn stripe_field(&self) -> &[f64] {
        &self.stripe
    }

    pub fn dead_pixels(&self) -> &[usize] {
        &self.dead
    }

    pub fn hot_pixels(&self) -> &[usize] {
        &self.hot
    }

    /// The injected defect map in the calibration module's representation.
    pub fn bad_pixel_map(&self) -> BadPixelMap {
        let mut flags = vec![false; self.gain.len()];
        for &i in self.dead.iter().chain(&self.hot) {
            flags[i] = true;
        }
        BadPixelMap::new(self.width, self.height, flags).expect("fields match model dimensions")
    }
}

/// Per-pixel scene temperatures in °C.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    width: u16,
    height: u16,
    temps: Vec<f64>,
}

impl Scene {
    pub fn new(width: u16, height: u16, temps: Vec<f64>) -> Result<Self> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::DimensionMismatch(format!(
                "scene {width}x{height} below the {MIN_DIMENSION}-pixel minimum"
            )));
        }
        if temps.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "scene payload {} for {width}x{height}",
                temps.len()
            )));
        }
        if let Some(&t) = temps.iter().find(|t| !(t.is_finite() && (-20.0..=120.0).contains(*t))) {
            return Err(Error::InvalidParam(format!(
                "scene temperature {t} outside [-20, 120] °C"
            )));
        }
        Ok(Self {
            width,
            height,
            temps,
        })
    }

    /// Uniform-temperature flat field, the calibration and RNU workhorse.
    pub fn flat(width: u16, height: u16, temp_c: f64) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, vec![temp_c; n])
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn temps(&self) -> &[f64] {
        &self.temps
    }
}

/// Renders one raw frame:
/// raw_i = clamp(round(a_i·k·T(i) + o_i + d_i·(fpa − 25) + stripe(col) + flare(i) + ε), 0, 2^14 − 1),
/// with ε ~ N(0, temporal_sigma) drawn from the model seed's stream for this
/// frame_index (row-major per pixel), then dead/hot defects forced to 0/max.
pub fn simulate_raw(
    scene: &Scene,
    model: &NoiseModel,
    fpa_temp_c: f64,
    frame_index: u32,
) -> Result<RawFrame> {
    if scene.width() != model.width || scene.height() != model.height {
        return Err(Error::DimensionMismatch(format!(
            "scene {}x{} vs model {}x{}",
            scene.width(),
            scene.height(),
            model.width,
            model.height
        )));
    }
    let (w, h) = (model.width as usize, model.height as usize);
    let max = max_sample(DEFAULT_BIT_DEPTH);
    let k = model.params.flux_per_degree;
    let dt = fpa_temp_c - SIM_T_REF_C;

    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(frame_index as u64 + 1);

    let mut samples = vec![0u16; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut v = model.gain[i] * k * scene.temps[i]
                + model.offset[i]
                + model.drift[i] * dt
                + model.stripe[x];
            if let Some(f) = model.params.flare {
                let dx = x as f64 - f.center_x;
                let dy = y as f64 - f.center_y;
                v += f.amplitude * (-(dx * dx + dy * dy) / (2.0 * f.sigma * f.sigma)).exp();
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            v += model.params.temporal_sigma * z;
            samples[i] = v.round().clamp(0.0, max as f64) as u16;
        }
    }
    for &i in &model.dead {
        samples[i] = 0;
    }
    for &i in &model.hot {
        samples[i] = max;
    }
    RawFrame::new(model.width, model.height, DEFAULT_BIT_DEPTH, fpa_temp_c, samples)
}

/// Renders `count` frames of one scene at one FPA temperature, with frame
/// indices starting at `first_index` so temporal noise differs per frame.
pub fn simulate_stack(
    scene: &Scene,
    model: &NoiseModel,
    fpa_temp_c: f64,
    first_index: u32,
    count: usize,
    source_tag: &str,
) -> Result<FrameStack> {
    let frames = (0..count)
        .map(|j| simulate_raw(scene, model, fpa_temp_c, first_index + j as u32))
        .collect::<Result<Vec<_>>>()?;
    FrameStack::new(frames, source_tag)
}

/// Renders the flat-field reference stacks a calibration run needs: cold and
/// hot at the first ambient, plus the second-ambient stack for shutterless
/// setpoints. Frame indices run consecutively across the stacks.
pub fn generate_calibration_set(
    model: &NoiseModel,
    setpoints: &CalibrationSetpoints,
    frames_per_ref: usize,
) -> Result<(FrameStack, FrameStack, Option<FrameStack>)> {
    if frames_per_ref < 2 {
        return Err(Error::TooFewFrames {
            got: frames_per_ref,
            needed: 2,
        });
    }
    let f = frames_per_ref;
    let cold_scene = Scene::flat(model.width, model.height, setpoints.t_scene_cold_c)?;
    let hot_scene = Scene::flat(model.width, model.height, setpoints.t_scene_hot_c)?;
    let cold = simulate_stack(&cold_scene, model, setpoints.t_amb_1_c, 0, f, "cal-cold")?;
    let hot = simulate_stack(&hot_scene, model, setpoints.t_amb_1_c, f as u32, f, "cal-hot")?;
    let ref_2 = match setpoints.mode() {
        CalMode::Shutter => None,
        CalMode::Shutterless => {
            let t_amb_2 = setpoints.t_amb_2_c.expect("shutterless setpoints");
            let t_scene_3 = setpoints.t_scene_3_c.expect("shutterless setpoints");
            let scene = Scene::flat(model.width, model.height, t_scene_3)?;
            Some(simulate_stack(
                &scene,
                model,
                t_amb_2,
                2 * f as u32,
                f,
                "cal-ref2",
            )?)
        }
    };
    Ok((cold, hot, ref_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::frame_stats;
    use crate::nuc::{calibrate_shutter, temporal_std};
    use crate::stages::{destripe, DestripeParams};

    #[test]
    fn same_seed_reproduces_fields_and_frames() {
        let a = build_noise_model(7, 32, 24, NoiseModelParams::default()).unwrap();
        let b = build_noise_model(7, 32, 24, NoiseModelParams::default()).unwrap();
        assert_eq!(a.gain_field(), b.gain_field());
        assert_eq!(a.offset_field(), b.offset_field());
        assert_eq!(a.drift_field(), b.drift_field());
        assert_eq!(a.stripe_field(), b.stripe_field());
        assert_eq!(a.dead_pixels(), b.dead_pixels());
        let scene = Scene::flat(32, 24, 25.0).unwrap();
        let fa = simulate_raw(&scene, &a, 30.0, 3).unwrap();
        let fb = simulate_raw(&scene, &b, 30.0, 3).unwrap();
        assert_eq!(fa, fb);
        let c = build_noise_model(8, 32, 24, NoiseModelParams::default()).unwrap();
        assert_ne!(a.gain_field(), c.gain_field());
    }

    #[test]
    fn ideal_sensor_renders_pure_flux() {
        let model = build_noise_model(1, 16, 16, NoiseModelParams::ideal()).unwrap();
        let scene = Scene::flat(16, 16, 10.0).unwrap();
        let frame = simulate_raw(&scene, &model, 25.0, 0).unwrap();
        assert!(frame.samples().iter().all(|&v| v == 1000));
        // FPA temperature is carried through, and drift is inert when zero.
        let warm = simulate_raw(&scene, &model, 40.0, 0).unwrap();
        assert_eq!(warm.fpa_temp_c(), 40.0);
        assert_eq!(warm.samples(), frame.samples());
    }

    #[test]
    fn zero_sigma_still_consumes_draws() {
        let with_gain = build_noise_model(11, 24, 16, NoiseModelParams::default()).unwrap();
        let no_gain = build_noise_model(
            11,
            24,
            16,
            NoiseModelParams {
                sigma_gain: 0.0,
                ..NoiseModelParams::default()
            },
        )
        .unwrap();
        assert!(no_gain.gain_field().iter().all(|&g| g == 1.0));
        assert_eq!(with_gain.offset_field(), no_gain.offset_field());
        assert_eq!(with_gain.stripe_field(), no_gain.stripe_field());
    }

    #[test]
    fn fixed_pattern_noise_dominates_temporal_noise() {
        let model = build_noise_model(2, 64, 48, NoiseModelParams::default()).unwrap();
        let scene = Scene::flat(64, 48, 25.0).unwrap();
        let frame = simulate_raw(&scene, &model, 25.0, 0).unwrap();
        let stats = frame_stats(&frame);
        assert!(
            stats.std > 10.0 * model.params().temporal_sigma,
            "spatial std {} vs temporal sigma {}",
            stats.std,
            model.params().temporal_sigma
        );
    }

    #[test]
    fn temporal_noise_has_the_requested_scale() {
        let params = NoiseModelParams {
            temporal_sigma: 6.0,
            ..NoiseModelParams::ideal()
        };
        let model = build_noise_model(3, 32, 32, params).unwrap();
        let scene = Scene::flat(32, 32, 30.0).unwrap();
        let stack = simulate_stack(&scene, &model, 25.0, 0, 50, "t").unwrap();
        let stds = temporal_std(&stack);
        let mean_std = stds.iter().sum::<f64>() / stds.len() as f64;
        assert!(
            (mean_std - 6.0).abs() < 0.6,
            "mean temporal std {mean_std}"
        );
        // Distinct frame indices give distinct noise.
        assert_ne!(stack.frames()[0], stack.frames()[1]);
    }

    #[test]
    fn defects_overwrite_the_scene() {
        let params = NoiseModelParams {
            bad_fraction: 0.02,
            ..NoiseModelParams::default()
        };
        let model = build_noise_model(9, 32, 32, params).unwrap();
        assert_eq!(model.dead_pixels().len() + model.hot_pixels().len(), 20);
        let scene = Scene::flat(32, 32, 40.0).unwrap();
        let frame = simulate_raw(&scene, &model, 25.0, 0).unwrap();
        for &i in model.dead_pixels() {
            assert_eq!(frame.samples()[i], 0);
        }
        for &i in model.hot_pixels() {
            assert_eq!(frame.samples()[i], 16383);
        }
        assert_eq!(model.bad_pixel_map().count(), 20);
    }

    #[test]
    fn flare_blob_raises_its_center_only() {
        let params = NoiseModelParams {
            flare: Some(FlareBlob {
                center_x: 16.0,
                center_y: 16.0,
                sigma: 3.0,
                amplitude: 500.0,
            }),
            ..NoiseModelParams::ideal()
        };
        let model = build_noise_model(4, 32, 32, params).unwrap();
        let scene = Scene::flat(32, 32, 10.0).unwrap();
        let frame = simulate_raw(&scene, &model, 25.0, 0).unwrap();
        assert_eq!(frame.at(16, 16), 1500);
        assert_eq!(frame.at(0, 0), 1000); // 5.3 sigma out, contribution < 0.5
    }

    #[test]
    fn ideal_sensor_calibrates_to_identity() {
        let model = build_noise_model(5, 16, 16, NoiseModelParams::ideal()).unwrap();
        let setpoints = CalibrationSetpoints::shutter(10.0, 40.0, 25.0).unwrap();
        let (cold, hot, none) = generate_calibration_set(&model, &setpoints, 4).unwrap();
        assert!(none.is_none());
        assert_eq!(cold.frames()[0].fpa_temp_c(), 25.0);
        let table = calibrate_shutter(&cold, &hot, &setpoints).unwrap();
        for (&g, &o) in table.gain.iter().zip(&table.offset) {
            assert!((g - 1.0).abs() < 1e-9);
            assert!(o.abs() < 1e-6);
        }
    }

    #[test]
    fn shutterless_set_carries_ambient_fpa_temps() {
        let model = build_noise_model(6, 16, 16, NoiseModelParams::ideal()).unwrap();
        let setpoints =
            CalibrationSetpoints::shutterless(10.0, 40.0, 30.0, 35.0, 10.0).unwrap();
        let (cold, hot, ref_2) = generate_calibration_set(&model, &setpoints, 3).unwrap();
        let ref_2 = ref_2.unwrap();
        assert_eq!(cold.frames()[0].fpa_temp_c(), 30.0);
        assert_eq!(hot.frames()[0].fpa_temp_c(), 30.0);
        assert_eq!(ref_2.frames()[0].fpa_temp_c(), 35.0);
        assert_eq!(cold.len(), 3);
        // Third reference views the cold scene: flux k·10 at zero noise.
        assert!(ref_2.frames()[0].samples().iter().all(|&v| v == 1000));
        assert!(matches!(
            generate_calibration_set(&model, &setpoints, 1),
            Err(Error::TooFewFrames { got: 1, needed: 2 })
        ));
    }

    #[test]
    fn stripe_only_model_is_recovered_by_destriping() {
        let params = NoiseModelParams {
            sigma_gain: 0.0,
            sigma_offset: 0.0,
            sigma_drift: 0.0,
            bad_fraction: 0.0,
            temporal_sigma: 0.0,
            ..NoiseModelParams::default()
        };
        let model = build_noise_model(20, 4096, 16, params).unwrap();
        let scene = Scene::flat(4096, 16, 30.0).unwrap();
        let frame = simulate_raw(&scene, &model, 25.0, 0).unwrap();
        let out = destripe(&frame, &DestripeParams { smooth_window: 3277 }).unwrap();
        for y in 0..16 {
            for x in 1638..(4096 - 1638) {
                let v = out.at(x, y) as i32;
                assert!(
                    (v - 3000).abs() <= 1,
                    "column {x} restored to {v}, expected 3000 ± 1"
                );
            }
        }
    }

    #[test]
    fn scene_and_params_are_validated() {
        assert!(Scene::flat(8, 16, 20.0).is_err());
        assert!(Scene::flat(16, 16, 300.0).is_err());
        assert!(Scene::new(16, 16, vec![20.0; 17]).is_err());
        let bad = NoiseModelParams {
            sigma_offset: -1.0,
            ..NoiseModelParams::default()
        };
        assert!(build_noise_model(0, 16, 16, bad).is_err());
        let model = build_noise_model(0, 16, 16, NoiseModelParams::ideal()).unwrap();
        let wrong = Scene::flat(32, 32, 20.0).unwrap();
        assert!(matches!(
            simulate_raw(&wrong, &model, 25.0, 0),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
