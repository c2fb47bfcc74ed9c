//! Interactive browser demo: a simulated thermal street scene viewed through
//! an uncooled sensor, shown raw and corrected side by side.
//!
//! The `Demo` object owns a noise model, a factory calibration built from
//! flat-field references, and a synthetic scene. The page drives it with
//! three controls: stage toggles plus a tonemap picker, a sensor-temperature
//! slider (which exposes ambient drift, since the shutter-mode table pins its
//! correction to the calibration ambient), and a frame-advance button that
//! redraws the temporal noise. Every entry point is infallible: inputs are
//! clamped or ignored rather than surfaced as errors, because a canvas demo
//! has nowhere sensible to put a `Result`.
//!
//! The correction path composes the library stages directly (NUC, bad-pixel
//! replacement, destriping, bilateral denoising, tonemap) instead of calling
//! the timed pipeline runner, which needs a monotonic clock that
//! `wasm32-unknown-unknown` does not provide.

use irpipe::nuc::{calibrate_shutter, apply_nuc, CalibrationSetpoints, CalibrationTable};
use irpipe::sim::{build_noise_model, generate_calibration_set, simulate_raw, NoiseModel, Scene};
use irpipe::stages::{
    destripe, replace_bad_pixels, spatial_denoise, BprParams, DestripeParams,
    SpatialDenoiseParams,
};
use irpipe::tonemap::{tonemap, TonemapAlgorithm, TonemapSpec};
use irpipe::{quality_metrics, NoiseModelParams, RawFrame};
use wasm_bindgen::prelude::wasm_bindgen;

const MIN_DIM: u16 = 32;
const MAX_DIM: u16 = 512;
const CAL_FRAMES: usize = 8;

/// Per-pixel temperatures for a little nighttime street: cold sky over
/// building facades with lit windows, a road, a parked car with a warm
/// engine bay, and a pedestrian.
fn street_scene(width: u16, height: u16) -> Scene {
    let (w, h) = (width as usize, height as usize);
    let mut temps = vec![0.0f64; w * h];
    let horizon = h * 2 / 5;
    let road_top = h * 3 / 4;
    for y in 0..h {
        for x in 0..w {
            let t = if y < horizon {
                // Sky, warming slightly toward the horizon.
                6.0 + 4.0 * y as f64 / horizon as f64
            } else if y < road_top {
                18.0
            } else {
                15.0
            };
            temps[y * w + x] = t;
        }
    }
    // Two facades separated by an alley, each with a window grid.
    let alley = (w * 11 / 20, w * 13 / 20);
    for y in horizon..road_top {
        for x in 0..w {
            if x >= alley.0 && x < alley.1 {
                temps[y * w + x] = 12.0;
            } else if ((x * 10 / w) % 2 == 1) && (((y - horizon) * 8 / (road_top - horizon)) % 2 == 1) {
                temps[y * w + x] = 27.0;
            }
        }
    }
    // Parked car: warm shell, hot engine bay at its front.
    let (car_x0, car_x1) = (w / 10, w * 3 / 10);
    let (car_y0, car_y1) = (road_top.saturating_sub(h / 10), road_top);
    for y in car_y0..car_y1 {
        for x in car_x0..car_x1 {
            temps[y * w + x] = 24.0;
        }
    }
    for y in car_y0..car_y1 {
        for x in car_x1.saturating_sub((car_x1 - car_x0) / 4)..car_x1 {
            temps[y * w + x] = 52.0;
        }
    }
    // Pedestrian: a head-and-torso pair of warm blocks near the alley.
    let ped_x = w * 7 / 10;
    let ped_w = (w / 24).max(1);
    let torso_top = road_top.saturating_sub(h / 8);
    for y in torso_top..road_top {
        for x in ped_x..(ped_x + ped_w).min(w) {
            temps[y * w + x] = 33.0;
        }
    }
    let head = (h / 24).max(1);
    for y in torso_top.saturating_sub(head)..torso_top {
        for x in ped_x..(ped_x + ped_w).min(w) {
            temps[y * w + x] = 35.0;
        }
    }
    Scene::new(width, height, temps).expect("street scene temperatures are in range")
}

fn rgba(display: &irpipe::DisplayFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(display.samples().len() * 4);
    for &v in display.samples() {
        out.extend_from_slice(&[v, v, v, 255]);
    }
    out
}

/// The demo state machine the page talks to.
#[wasm_bindgen]
pub struct Demo {
    scene: Scene,
    model: NoiseModel,
    clean_model: NoiseModel,
    table: CalibrationTable,
    frame_index: u32,
    fpa_temp_c: f64,
    destrip: bool,
    bpr: bool,
    sdn: bool,
    algorithm: TonemapAlgorithm,
    raw_rgba: Vec<u8>,
    corrected_rgba: Vec<u8>,
    metrics: String,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the sensor model and runs the factory calibration.
    /// Dimensions are clamped to [32, 512]; the seed picks the sensor.
    #[wasm_bindgen(constructor)]
    pub fn new(width: u16, height: u16, seed: u32) -> Demo {
        let width = width.clamp(MIN_DIM, MAX_DIM);
        let height = height.clamp(MIN_DIM, MAX_DIM);
        let params = NoiseModelParams::default();
        let model = build_noise_model(seed as u64, width, height, params.clone())
            .expect("clamped dimensions are valid");
        // Same flux constant, no defects: the ground truth for PSNR.
        let clean_model = build_noise_model(
            seed as u64,
            width,
            height,
            NoiseModelParams {
                flux_per_degree: params.flux_per_degree,
                ..NoiseModelParams::ideal()
            },
        )
        .expect("clamped dimensions are valid");
        let setpoints =
            CalibrationSetpoints::shutter(10.0, 40.0, 25.0).expect("fixed setpoints are valid");
        let (cold, hot, _) = generate_calibration_set(&model, &setpoints, CAL_FRAMES)
            .expect("reference rendering cannot fail on a valid model");
        let table = calibrate_shutter(&cold, &hot, &setpoints)
            .expect("default defect density is under the flag budget");
        let mut demo = Demo {
            scene: street_scene(width, height),
            model,
            clean_model,
            table,
            frame_index: 0,
            fpa_temp_c: 25.0,
            destrip: true,
            bpr: true,
            sdn: false,
            algorithm: TonemapAlgorithm::Equalized,
            raw_rgba: Vec::new(),
            corrected_rgba: Vec::new(),
            metrics: String::new(),
        };
        demo.render();
        demo
    }

    pub fn width(&self) -> u16 {
        self.model.width()
    }

    pub fn height(&self) -> u16 {
        self.model.height()
    }

    /// Turns correction stages on or off and redraws.
    pub fn set_stages(&mut self, destrip: bool, bpr: bool, sdn: bool) {
        self.destrip = destrip;
        self.bpr = bpr;
        self.sdn = sdn;
        self.render();
    }

    /// Switches the display mapping; unknown names are ignored.
    pub fn set_tonemap(&mut self, name: &str) {
        if let Ok(algorithm) = name.parse::<TonemapAlgorithm>() {
            self.algorithm = algorithm;
            self.render();
        }
    }

    /// Moves the sensor away from its 25 C calibration point, clamped to the
    /// valid FPA range, so uncorrected ambient drift becomes visible.
    pub fn set_fpa_temp(&mut self, t_c: f64) {
        self.fpa_temp_c = if t_c.is_finite() { t_c.clamp(-40.0, 120.0) } else { 25.0 };
        self.render();
    }

    /// Advances to the next frame of temporal noise.
    pub fn next_frame(&mut self) {
        self.frame_index = self.frame_index.wrapping_add(1);
        self.render();
    }

    /// RGBA bytes (width*height*4) of the uncorrected sensor output.
    pub fn raw_rgba(&self) -> Vec<u8> {
        self.raw_rgba.clone()
    }

    /// RGBA bytes (width*height*4) of the corrected output.
    pub fn corrected_rgba(&self) -> Vec<u8> {
        self.corrected_rgba.clone()
    }

    /// One-line quality readout for the current frame.
    pub fn metrics_text(&self) -> String {
        self.metrics.clone()
    }

    fn correct(&self, raw: &RawFrame) -> RawFrame {
        let mut frame = apply_nuc(raw, &self.table).expect("table matches the sensor");
        if self.bpr {
            frame = replace_bad_pixels(&frame, &self.table.bad_pixels, &BprParams::default())
                .expect("map matches the sensor");
        }
        if self.destrip {
            frame = destripe(&frame, &DestripeParams::default()).expect("default window is valid");
        }
        if self.sdn {
            frame = spatial_denoise(&frame, &SpatialDenoiseParams::default())
                .expect("default sigmas are valid");
        }
        frame
    }

    fn render(&mut self) {
        let raw = simulate_raw(&self.scene, &self.model, self.fpa_temp_c, self.frame_index)
            .expect("scene and model share dimensions");
        let clean = simulate_raw(&self.scene, &self.clean_model, 25.0, self.frame_index)
            .expect("scene and model share dimensions");
        let corrected = self.correct(&raw);
        let spec = TonemapSpec::new(self.algorithm);
        self.raw_rgba = rgba(&tonemap(&raw, &spec).expect("display mapping cannot fail"));
        self.corrected_rgba =
            rgba(&tonemap(&corrected, &spec).expect("display mapping cannot fail"));
        let before = quality_metrics(&raw, Some(&clean)).expect("frames share dimensions");
        let after = quality_metrics(&corrected, Some(&clean)).expect("frames share dimensions");
        self.metrics = format!(
            "PSNR vs clean: raw {:.1} dB, corrected {:.1} dB | column noise: {:.2} -> {:.2} | bad pixels: {} ({:.2}%)",
            before.psnr_db.unwrap_or(0.0),
            after.psnr_db.unwrap_or(0.0),
            before.cni,
            after.cni,
            self.table.bad_pixels.count(),
            100.0 * self.table.bad_pixels.fraction(),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_covers_every_pixel_within_limits() {
        let scene = street_scene(160, 120);
        assert_eq!(scene.temps().len(), 160 * 120);
        assert!(scene.temps().iter().all(|t| (-20.0..=120.0).contains(t)));
        // The scene has real structure: sky and engine bay differ by > 40 C.
        let lo = scene.temps().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scene.temps().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo > 40.0, "scene span {lo}..{hi}");
    }

    #[test]
    fn construction_clamps_dimensions_and_fills_buffers() {
        let demo = Demo::new(8, 2000, 7);
        assert_eq!((demo.width(), demo.height()), (32, 512));
        let raw = demo.raw_rgba();
        assert_eq!(raw.len(), 32 * 512 * 4);
        assert!(raw.chunks(4).all(|px| px[3] == 255 && px[0] == px[1] && px[1] == px[2]));
        assert_eq!(demo.corrected_rgba().len(), raw.len());
    }

    #[test]
    fn correction_improves_psnr() {
        let demo = Demo::new(96, 96, 11);
        let text = demo.metrics_text();
        let mut parts = text.split(" dB").flat_map(|p| p.rsplit(' ').next());
        let raw: f64 = parts.next().unwrap().parse().unwrap();
        let corrected: f64 = parts.next().unwrap().parse().unwrap();
        assert!(
            corrected > raw + 3.0,
            "corrected {corrected} dB should beat raw {raw} dB clearly"
        );
    }

    #[test]
    fn stage_toggles_and_tonemap_change_the_picture() {
        let mut demo = Demo::new(96, 96, 3);
        let all_on = demo.corrected_rgba();
        demo.set_stages(false, false, false);
        assert_ne!(demo.corrected_rgba(), all_on, "stage toggles must matter");
        let equalized = demo.corrected_rgba();
        demo.set_tonemap("minmax");
        assert_ne!(demo.corrected_rgba(), equalized, "tonemap choice must matter");
        let minmax = demo.corrected_rgba();
        demo.set_tonemap("not-a-tonemap");
        assert_eq!(demo.corrected_rgba(), minmax, "unknown names are ignored");
    }

    #[test]
    fn frame_advance_redraws_temporal_noise() {
        let mut demo = Demo::new(64, 64, 5);
        let first = demo.raw_rgba();
        demo.next_frame();
        assert_ne!(demo.raw_rgba(), first);
    }

    #[test]
    fn fpa_slider_is_clamped_and_changes_the_raw_frame() {
        let mut demo = Demo::new(64, 64, 9);
        let nominal = demo.raw_rgba();
        demo.set_fpa_temp(400.0);
        let hot = demo.raw_rgba();
        assert_ne!(hot, nominal, "drift must move the raw image");
        demo.set_fpa_temp(120.0);
        assert_eq!(demo.raw_rgba(), hot, "400 C clamps to the 120 C limit");
    }
}
