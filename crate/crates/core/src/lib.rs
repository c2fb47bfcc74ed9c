//! Thermal-infrared correction pipeline: calibration, correction stages,
//! tonemapping, sensor simulation, quality metrics, and sweep harnesses.

pub mod config;
pub mod error;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod nuc;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod stages;
pub mod tonemap;

pub use error::{Error, Result};
pub use frame::{frame_stats, DisplayFrame, FrameStack, FrameStats, RawFrame};
pub use metrics::{quality_metrics, QualityMetrics};
pub use nuc::{
    apply_nuc, calibrate_shutter, calibrate_shutterless, detect_bad_pixels,
    shutter_update_offset, BadPixelMap, CalMode, CalibrationSetpoints, CalibrationTable,
};
pub use pipeline::{run_pipeline, PipelineConfig, StageToggles, SweepOptions, TimingReport};
pub use sim::{build_noise_model, simulate_raw, NoiseModel, NoiseModelParams, Scene};
pub use tonemap::{tonemap, TonemapAlgorithm, TonemapSpec};
