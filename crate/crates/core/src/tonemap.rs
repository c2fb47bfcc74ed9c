//! Tonemapping: converts corrected high-bit-depth frames to 8-bit display frames.
//!
//! Eight of the nine operators are global value maps realized as lookup tables
//! over the full input range; CLAHE is the one local operator. Every operator
//! short-circuits a constant frame (or a degenerate user range) to all-128 so
//! downstream consumers always receive defined output.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::{frame_stats, DisplayFrame, RawFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TonemapAlgorithm {
    Minmax,
    Std3,
    Clip,
    Equalized,
    Clahe,
    Piecewise,
    Adaptive1,
    Adaptive2,
    Dynamic,
}

impl TonemapAlgorithm {
    /// All nine operators, in the order reports list them.
    pub const ALL: [TonemapAlgorithm; 9] = [
        TonemapAlgorithm::Minmax,
        TonemapAlgorithm::Std3,
        TonemapAlgorithm::Clip,
        TonemapAlgorithm::Equalized,
        TonemapAlgorithm::Clahe,
        TonemapAlgorithm::Piecewise,
        TonemapAlgorithm::Adaptive1,
        TonemapAlgorithm::Adaptive2,
        TonemapAlgorithm::Dynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Minmax => "minmax",
            Self::Std3 => "std3",
            Self::Clip => "clip",
            Self::Equalized => "equalized",
            Self::Clahe => "clahe",
            Self::Piecewise => "piecewise",
            Self::Adaptive1 => "adaptive1",
            Self::Adaptive2 => "adaptive2",
            Self::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for TonemapAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TonemapAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown tonemap algorithm {s:?}")))
    }
}

/// Full tonemap specification: the algorithm plus every per-algorithm knob.
///
/// lo/hi apply to minmax (default: frame min/max) and clip (default: the full
/// sample range). Knee percentiles/outputs drive piecewise; percentile_clip
/// drives adaptive1; target_median drives adaptive2's gamma; plateau is
/// dynamic's histogram clip fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct TonemapSpec {
    pub algorithm: TonemapAlgorithm,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub clahe_tiles_x: usize,
    pub clahe_tiles_y: usize,
    pub clahe_clip_limit: f64,
    pub knee_percentiles: [f64; 3],
    pub knee_outputs: [u8; 3],
    pub percentile_clip: (f64, f64),
    pub target_median: u8,
    pub plateau: f64,
}

impl TonemapSpec {
    pub fn new(algorithm: TonemapAlgorithm) -> Self {
        Self {
            algorithm,
            lo: None,
            hi: None,
            clahe_tiles_x: 8,
            clahe_tiles_y: 8,
            clahe_clip_limit: 4.0,
            knee_percentiles: [1.0, 50.0, 99.0],
            knee_outputs: [0, 128, 255],
            percentile_clip: (0.5, 99.5),
            target_median: 128,
            plateau: 0.05,
        }
    }

    fn validate(&self, frame: &RawFrame) -> Result<()> {
        for b in [self.lo, self.hi].into_iter().flatten() {
            if !b.is_finite() {
                return Err(Error::InvalidParam(format!("non-finite bound {b}")));
            }
        }
        if self.clahe_tiles_x < 1
            || self.clahe_tiles_y < 1
            || self.clahe_tiles_x > frame.width() as usize
            || self.clahe_tiles_y > frame.height() as usize
        {
            return Err(Error::InvalidParam(format!(
                "CLAHE grid {}x{} invalid for a {}x{} frame",
                self.clahe_tiles_x,
                self.clahe_tiles_y,
                frame.width(),
                frame.height()
            )));
        }
        if !(self.clahe_clip_limit > 0.0) {
            return Err(Error::InvalidParam(format!(
                "CLAHE clip limit {}",
                self.clahe_clip_limit
            )));
        }
        let p = self.knee_percentiles;
        if !(0.0..=100.0).contains(&p[0]) || !(p[0] < p[1] && p[1] < p[2]) || p[2] > 100.0 {
            return Err(Error::InvalidParam(format!(
                "knee percentiles {p:?} not strictly increasing within [0, 100]"
            )));
        }
        let o = self.knee_outputs;
        if !(o[0] <= o[1] && o[1] <= o[2]) {
            return Err(Error::InvalidParam(format!(
                "knee outputs {o:?} not monotone"
            )));
        }
        let (a, b) = self.percentile_clip;
        if !(0.0..=100.0).contains(&a) || !(a < b) || b > 100.0 {
            return Err(Error::InvalidParam(format!(
                "percentile clip pair {a}/{b}"
            )));
        }
        if !(self.plateau > 0.0 && self.plateau <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "plateau fraction {} outside (0, 1]",
                self.plateau
            )));
        }
        Ok(())
    }
}

impl Default for TonemapSpec {
    fn default() -> Self {
        Self::new(TonemapAlgorithm::Std3)
    }
}

/// Linear quantization LUT: out = clamp(floor(256 (v - lo) / (hi - lo)), 0, 255).
/// A degenerate range (hi <= lo) maps everything to mid-gray.
fn linear_lut(bins: usize, lo: f64, hi: f64) -> Vec<u8> {
    if hi <= lo {
        return vec![128; bins];
    }
    let span = hi - lo;
    (0..bins)
        .map(|v| (256.0 * (v as f64 - lo) / span).floor().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Histogram-equalization LUT over (possibly fractional) bin counts:
/// out = round(255 (cdf - cdf_min) / (1 - cdf_min)), cdf_min at the first
/// occupied bin. Callers guarantee at least two occupied bins.
fn equalize_lut(counts: &[f64]) -> Vec<u8> {
    let total: f64 = counts.iter().sum();
    let cdf_min = counts.iter().find(|&&c| c > 0.0).copied().unwrap_or(0.0) / total;
    let mut cum = 0.0;
    counts
        .iter()
        .map(|&c| {
            cum += c;
            let cdf = cum / total;
            (255.0 * (cdf - cdf_min) / (1.0 - cdf_min))
                .round()
                .clamp(0.0, 255.0) as u8
        })
        .collect()
}

/// Smallest sample value whose cumulative count reaches q percent of the pixels.
fn percentile(histogram: &[u64], pixels: u64, q: f64) -> u16 {
    let threshold = (q / 100.0 * pixels as f64).max(1.0);
    let mut cum = 0u64;
    for (v, &c) in histogram.iter().enumerate() {
        cum += c;
        if cum as f64 >= threshold {
            return v as u16;
        }
    }
    (histogram.len() - 1) as u16
}

/// Monotone piecewise-linear LUT through three (value, output) knees; values
/// below the first knee or above the last saturate, zero-width segments step.
fn piecewise_lut(bins: usize, knees: [u16; 3], outputs: [u8; 3]) -> Vec<u8> {
    (0..bins)
        .map(|v| {
            let v = v as u16;
            if v <= knees[0] {
                outputs[0]
            } else if v >= knees[2] {
                outputs[2]
            } else {
                let (a, b) = if v <= knees[1] { (0, 1) } else { (1, 2) };
                if knees[b] == knees[a] {
                    outputs[b]
                } else {
                    let t = (v - knees[a]) as f64 / (knees[b] - knees[a]) as f64;
                    (outputs[a] as f64 + t * (outputs[b] as f64 - outputs[a] as f64)).round()
                        as u8
                }
            }
        })
        .collect()
}

fn apply_lut(frame: &RawFrame, lut: &[u8]) -> Vec<u8> {
    frame.samples().iter().map(|&v| lut[v as usize]).collect()
}

/// Maps a corrected frame to an 8-bit display frame with the chosen operator.
pub fn tonemap(frame: &RawFrame, spec: &TonemapSpec) -> Result<DisplayFrame> {
    spec.validate(frame)?;
    let stats = frame_stats(frame);
    let bins = stats.histogram.len();
    let pixels = frame.len() as u64;

    // Constant frames degenerate under every operator.
    if stats.min == stats.max {
        return DisplayFrame::new(frame.width(), frame.height(), vec![128; frame.len()]);
    }

    let samples = match spec.algorithm {
        TonemapAlgorithm::Minmax => {
            let lo = spec.lo.unwrap_or(stats.min as f64);
            let hi = spec.hi.unwrap_or(stats.max as f64);
            apply_lut(frame, &linear_lut(bins, lo, hi))
        }
        TonemapAlgorithm::Clip => {
            let lo = spec.lo.unwrap_or(0.0);
            let hi = spec.hi.unwrap_or((bins - 1) as f64);
            apply_lut(frame, &linear_lut(bins, lo, hi))
        }
        TonemapAlgorithm::Std3 => {
            let lut = linear_lut(bins, stats.mean - 3.0 * stats.std, stats.mean + 3.0 * stats.std);
            apply_lut(frame, &lut)
        }
        TonemapAlgorithm::Adaptive1 => {
            let lo = percentile(&stats.histogram, pixels, spec.percentile_clip.0) as f64;
            let hi = percentile(&stats.histogram, pixels, spec.percentile_clip.1) as f64;
            apply_lut(frame, &linear_lut(bins, lo, hi))
        }
        TonemapAlgorithm::Equalized => {
            let counts: Vec<f64> = stats.histogram.iter().map(|&c| c as f64).collect();
            apply_lut(frame, &equalize_lut(&counts))
        }
        TonemapAlgorithm::Dynamic => {
            // Plateau equalization: clip bin counts at plateau * tallest bin,
            // without redistribution, then equalize. plateau = 1 clips nothing.
            let max_count = stats.histogram.iter().copied().max().unwrap() as f64;
            let cap = spec.plateau * max_count;
            let counts: Vec<f64> = stats
                .histogram
                .iter()
                .map(|&c| (c as f64).min(cap))
                .collect();
            apply_lut(frame, &equalize_lut(&counts))
        }
        TonemapAlgorithm::Piecewise => {
            let knees = spec
                .knee_percentiles
                .map(|q| percentile(&stats.histogram, pixels, q));
            apply_lut(frame, &piecewise_lut(bins, knees, spec.knee_outputs))
        }
        TonemapAlgorithm::Adaptive2 => {
            let lut = linear_lut(bins, stats.min as f64, stats.max as f64);
            let mapped = apply_lut(frame, &lut);
            adaptive2_gamma(mapped, spec.target_median)
        }
        TonemapAlgorithm::Clahe => clahe(frame, spec, &stats.histogram),
    };
    DisplayFrame::new(frame.width(), frame.height(), samples)
}

/// Gamma-adapts a minmax-mapped frame so its median lands on target_median;
/// a median already saturated at 0 or 255 leaves the mapping untouched.
fn adaptive2_gamma(mapped: Vec<u8>, target_median: u8) -> Vec<u8> {
    let mut hist = [0u64; 256];
    for &v in &mapped {
        hist[v as usize] += 1;
    }
    // Median: smallest value whose cumulative count reaches half the pixels.
    let threshold = (mapped.len() as f64 / 2.0).ceil() as u64;
    let mut cum = 0u64;
    let mut median = 255u8;
    for (v, &c) in hist.iter().enumerate() {
        cum += c;
        if cum >= threshold {
            median = v as u8;
            break;
        }
    }
    if median == 0 || median == 255 {
        return mapped;
    }
    let g = (target_median as f64 / 255.0).ln() / (median as f64 / 255.0).ln();
    let lut: Vec<u8> = (0..256)
        .map(|v| (255.0 * (v as f64 / 255.0).powf(g)).round().clamp(0.0, 255.0) as u8)
        .collect();
    mapped.into_iter().map(|v| lut[v as usize]).collect()
}

/// Contrast-limited adaptive histogram equalization: per-tile clipped
/// equalization LUTs (excess redistributed uniformly in a single pass),
/// blended bilinearly between the four nearest tile centers.
fn clahe(frame: &RawFrame, spec: &TonemapSpec, _hist: &[u64]) -> Vec<u8> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let (tx_n, ty_n) = (spec.clahe_tiles_x, spec.clahe_tiles_y);
    let bins = 1usize << frame.bit_depth();

    let x_bound = |t: usize| t * w / tx_n;
    let y_bound = |t: usize| t * h / ty_n;

    let mut luts: Vec<Vec<u8>> = Vec::with_capacity(tx_n * ty_n);
    let mut centers_x = vec![0.0; tx_n];
    let mut centers_y = vec![0.0; ty_n];
    for ty in 0..ty_n {
        let (y0, y1) = (y_bound(ty), y_bound(ty + 1));
        centers_y[ty] = (y0 + y1 - 1) as f64 / 2.0;
        for tx in 0..tx_n {
            let (x0, x1) = (x_bound(tx), x_bound(tx + 1));
            centers_x[tx] = (x0 + x1 - 1) as f64 / 2.0;
            let mut counts = vec![0.0f64; bins];
            for y in y0..y1 {
                for x in x0..x1 {
                    counts[frame.at(x, y) as usize] += 1.0;
                }
            }
            let tile_pixels = ((x1 - x0) * (y1 - y0)) as f64;
            let cap = spec.clahe_clip_limit * tile_pixels / bins as f64;
            let mut excess = 0.0;
            for c in &mut counts {
                if *c > cap {
                    excess += *c - cap;
                    *c = cap;
                }
            }
            let share = excess / bins as f64;
            for c in &mut counts {
                *c += share;
            }
            luts.push(if counts.iter().filter(|&&c| c > 0.0).count() < 2 {
                vec![128; bins]
            } else {
                equalize_lut(&counts)
            });
        }
    }

    // Bilinear interpolation between tile maps, clamped at the border tiles.
    let locate = |p: f64, centers: &[f64]| -> (usize, usize, f64) {
        if p <= centers[0] {
            return (0, 0, 0.0);
        }
        if p >= centers[centers.len() - 1] {
            let last = centers.len() - 1;
            return (last, last, 0.0);
        }
        let hi = centers.partition_point(|&c| c <= p);
        let lo = hi - 1;
        (lo, hi, (p - centers[lo]) / (centers[hi] - centers[lo]))
    };
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        let (ty0, ty1, wy) = locate(y as f64, &centers_y);
        for x in 0..w {
            let (tx0, tx1, wx) = locate(x as f64, &centers_x);
            let v = frame.at(x, y) as usize;
            let l00 = luts[ty0 * tx_n + tx0][v] as f64;
            let l10 = luts[ty0 * tx_n + tx1][v] as f64;
            let l01 = luts[ty1 * tx_n + tx0][v] as f64;
            let l11 = luts[ty1 * tx_n + tx1][v] as f64;
            let top = l00 + wx * (l10 - l00);
            let bottom = l01 + wx * (l11 - l01);
            out[y * w + x] = (top + wy * (bottom - top)).round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::DEFAULT_BIT_DEPTH;

    fn frame_from(width: u16, height: u16, samples: Vec<u16>) -> RawFrame {
        RawFrame::new(width, height, DEFAULT_BIT_DEPTH, 25.0, samples).unwrap()
    }

    /// 128x128 frame holding every 14-bit value exactly once.
    fn full_ramp() -> RawFrame {
        frame_from(128, 128, (0..16384).map(|v| v as u16).collect())
    }

    fn seeded_frame(seed: u32, n: usize) -> Vec<u16> {
        let mut v = seed;
        (0..n)
            .map(|_| {
                v = v.wrapping_mul(1664525).wrapping_add(1013904223);
                (v >> 18) as u16
            })
            .collect()
    }

    #[test]
    fn minmax_midpoint_example() {
        let spec = TonemapSpec {
            lo: Some(0.0),
            hi: Some(16383.0),
            ..TonemapSpec::new(TonemapAlgorithm::Minmax)
        };
        let mut samples = vec![0u16; 256];
        samples[0] = 8191;
        samples[1] = 16383;
        let out = tonemap(&frame_from(16, 16, samples), &spec).unwrap();
        assert_eq!(out.samples()[0], 127); // floor(256 * 8191 / 16383)
        assert_eq!(out.samples()[1], 255);
    }

    #[test]
    fn std3_is_minmax_with_derived_bounds() {
        for seed in [1u32, 99, 12345] {
            let frame = frame_from(32, 32, seeded_frame(seed, 1024));
            let stats = frame_stats(&frame);
            let std3 = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Std3)).unwrap();
            let minmax = tonemap(
                &frame,
                &TonemapSpec {
                    lo: Some(stats.mean - 3.0 * stats.std),
                    hi: Some(stats.mean + 3.0 * stats.std),
                    ..TonemapSpec::new(TonemapAlgorithm::Minmax)
                },
            )
            .unwrap();
            assert_eq!(std3, minmax);
        }
    }

    #[test]
    fn constant_frame_degenerates_to_mid_gray_under_all_nine() {
        let frame = frame_from(16, 16, vec![7000; 256]);
        for algorithm in TonemapAlgorithm::ALL {
            let out = tonemap(&frame, &TonemapSpec::new(algorithm)).unwrap();
            assert!(
                out.samples().iter().all(|&v| v == 128),
                "{algorithm} broke the degenerate rule"
            );
        }
    }

    #[test]
    fn degenerate_user_bounds_also_yield_mid_gray() {
        let frame = frame_from(16, 16, (0..256).collect());
        let spec = TonemapSpec {
            lo: Some(900.0),
            hi: Some(900.0),
            ..TonemapSpec::new(TonemapAlgorithm::Minmax)
        };
        let out = tonemap(&frame, &spec).unwrap();
        assert!(out.samples().iter().all(|&v| v == 128));
    }

    #[test]
    fn equalized_two_level_cdf_oracle() {
        // 25% at value 100, 75% at value 5000: cdf(100) = 1/4 = cdf_min -> 0,
        // cdf(5000) = 1 -> 255.
        let mut samples = vec![5000u16; 256];
        for s in samples.iter_mut().take(64) {
            *s = 100;
        }
        let out = tonemap(
            &frame_from(16, 16, samples.clone()),
            &TonemapSpec::new(TonemapAlgorithm::Equalized),
        )
        .unwrap();
        for (o, s) in out.samples().iter().zip(&samples) {
            assert_eq!(*o, if *s == 100 { 0 } else { 255 });
        }
    }

    #[test]
    fn equalized_flattens_a_full_ramp() {
        let out = tonemap(&full_ramp(), &TonemapSpec::new(TonemapAlgorithm::Equalized)).unwrap();
        let mut hist = [0u64; 256];
        for &v in out.samples() {
            hist[v as usize] += 1;
        }
        let n = out.samples().len() as f64;
        let mut cum = 0.0;
        let mut ks: f64 = 0.0;
        for (k, &c) in hist.iter().enumerate() {
            cum += c as f64;
            ks = ks.max((cum / n - (k + 1) as f64 / 256.0).abs());
        }
        assert!(ks <= 0.05, "KS statistic {ks:.4}");
    }

    #[test]
    fn dynamic_with_full_plateau_equals_equalized() {
        for seed in [3u32, 77] {
            let frame = frame_from(32, 32, seeded_frame(seed, 1024));
            let eq = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Equalized)).unwrap();
            let dyn1 = tonemap(
                &frame,
                &TonemapSpec {
                    plateau: 1.0,
                    ..TonemapSpec::new(TonemapAlgorithm::Dynamic)
                },
            )
            .unwrap();
            assert_eq!(eq, dyn1);
        }
    }

    #[test]
    fn dynamic_plateau_tames_a_histogram_spike() {
        // 90% of pixels at one value would grab 90% of the output range under
        // plain equalization; the plateau cap limits that jump.
        let mut samples = vec![8000u16; 1024];
        for (i, s) in samples.iter_mut().enumerate().take(102) {
            *s = (i * 160) as u16;
        }
        let frame = frame_from(32, 32, samples);
        let eq = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Equalized)).unwrap();
        let dy = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Dynamic)).unwrap();
        let jump = |d: &crate::frame::DisplayFrame| {
            // Output level of the spike value minus the level just below it.
            let spike = d.samples()[200] as i32; // one of the 8000-valued pixels
            let below = d
                .samples()
                .iter()
                .zip(frame.samples())
                .filter(|(_, &s)| s < 8000)
                .map(|(&o, _)| o as i32)
                .max()
                .unwrap();
            spike - below
        };
        assert!(jump(&dy) < jump(&eq));
    }

    #[test]
    fn piecewise_knees_on_a_full_ramp() {
        let frame = full_ramp();
        let out = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Piecewise)).unwrap();
        let stats = frame_stats(&frame);
        let knees = [1.0, 50.0, 99.0].map(|q| percentile(&stats.histogram, 16384, q));
        let at = |v: u16| out.samples()[v as usize]; // ramp: sample i has value i
        assert_eq!(at(knees[0]), 0);
        assert_eq!(at(knees[1]), 128);
        assert_eq!(at(knees[2]), 255);
        assert_eq!(at(0), 0);
        assert_eq!(at(16383), 255);
        // Interior point matches the linear interpolation formula.
        let mid = (knees[0] + knees[1]) / 2;
        let expected = (128.0 * (mid - knees[0]) as f64 / (knees[1] - knees[0]) as f64).round();
        assert_eq!(at(mid) as f64, expected);
    }

    #[test]
    fn adaptive1_equals_minmax_at_its_percentiles() {
        let frame = frame_from(32, 32, seeded_frame(5, 1024));
        let stats = frame_stats(&frame);
        let a1 = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Adaptive1)).unwrap();
        let reference = tonemap(
            &frame,
            &TonemapSpec {
                lo: Some(percentile(&stats.histogram, 1024, 0.5) as f64),
                hi: Some(percentile(&stats.histogram, 1024, 99.5) as f64),
                ..TonemapSpec::new(TonemapAlgorithm::Minmax)
            },
        )
        .unwrap();
        assert_eq!(a1, reference);
    }

    #[test]
    fn adaptive2_pulls_median_to_target() {
        // Dark-skewed frame: most pixels low, a bright tail.
        let mut samples: Vec<u16> = (0..1024).map(|i| 100 + (i % 700) as u16).collect();
        samples[0] = 12000;
        let frame = frame_from(32, 32, samples);
        let out = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Adaptive2)).unwrap();
        let mut sorted = out.samples().to_vec();
        sorted.sort_unstable();
        let median = sorted[sorted.len() / 2];
        assert!(
            (median as i32 - 128).abs() <= 1,
            "median {median} not near 128"
        );
    }

    #[test]
    fn global_maps_are_monotone_on_the_full_ramp() {
        let frame = full_ramp();
        for algorithm in TonemapAlgorithm::ALL {
            if algorithm == TonemapAlgorithm::Clahe {
                continue; // local operator, not a global value map
            }
            let out = tonemap(&frame, &TonemapSpec::new(algorithm)).unwrap();
            for v in 1..16384usize {
                assert!(
                    out.samples()[v] >= out.samples()[v - 1],
                    "{algorithm} decreases at {v}"
                );
            }
        }
    }

    #[test]
    fn clahe_output_is_valid_and_deterministic() {
        let frame = frame_from(64, 64, seeded_frame(11, 4096));
        let a = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Clahe)).unwrap();
        let b = tonemap(&frame, &TonemapSpec::new(TonemapAlgorithm::Clahe)).unwrap();
        assert_eq!(a, b);
        // A low-contrast and a high-contrast half must both span some range.
        assert!(a.samples().iter().any(|&v| v < 100));
        assert!(a.samples().iter().any(|&v| v > 155));
    }

    #[test]
    fn spec_validation_rejects_nonsense() {
        let frame = frame_from(16, 16, (0..256).collect());
        let bad_knees = TonemapSpec {
            knee_percentiles: [50.0, 1.0, 99.0],
            ..TonemapSpec::new(TonemapAlgorithm::Piecewise)
        };
        assert!(tonemap(&frame, &bad_knees).is_err());
        let bad_plateau = TonemapSpec {
            plateau: 0.0,
            ..TonemapSpec::new(TonemapAlgorithm::Dynamic)
        };
        assert!(tonemap(&frame, &bad_plateau).is_err());
        let bad_tiles = TonemapSpec {
            clahe_tiles_x: 99,
            ..TonemapSpec::new(TonemapAlgorithm::Clahe)
        };
        assert!(tonemap(&frame, &bad_tiles).is_err());
        let bad_outputs = TonemapSpec {
            knee_outputs: [10, 5, 255],
            ..TonemapSpec::new(TonemapAlgorithm::Piecewise)
        };
        assert!(tonemap(&frame, &bad_outputs).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for algorithm in TonemapAlgorithm::ALL {
            assert_eq!(
                algorithm.name().parse::<TonemapAlgorithm>().unwrap(),
                algorithm
            );
        }
        assert!("bogus".parse::<TonemapAlgorithm>().is_err());
    }
}
