//! Motion-compensated temporal denoising: each block of the current frame is
//! matched against the previous output by exhaustive SAD search, and blended
//! with the compensated block when the match is good enough.

use crate::error::{Error, Result};
use crate::frame::RawFrame;

/// Temporal denoise parameters. blend_alpha is the weight of the compensated
/// previous frame; sad_reject is the per-pixel mean absolute difference above
/// which a block is considered unmatched and passed through.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDenoiseParams {
    pub block: usize,
    pub search_radius: usize,
    pub blend_alpha: f64,
    pub sad_reject: f64,
}

impl Default for TemporalDenoiseParams {
    fn default() -> Self {
        Self {
            block: 16,
            search_radius: 8,
            blend_alpha: 0.5,
            sad_reject: 32.0,
        }
    }
}

impl TemporalDenoiseParams {
    fn validate(&self) -> Result<()> {
        if self.block < 1 {
            return Err(Error::InvalidParam("TDN block size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.blend_alpha) {
            return Err(Error::InvalidParam(format!(
                "blend_alpha {} outside [0, 1)",
                self.blend_alpha
            )));
        }
        if !self.sad_reject.is_finite() || self.sad_reject < 0.0 {
            return Err(Error::InvalidParam(format!(
                "sad_reject {}",
                self.sad_reject
            )));
        }
        Ok(())
    }
}

/// Recursion state for one stream: the previous output frame plus the
/// parameters it was produced with, so mixed-parameter streams are rejected.
#[derive(Debug, Clone)]
pub struct TdnState {
    previous: Option<RawFrame>,
    params: TemporalDenoiseParams,
}

impl TdnState {
    pub fn new(params: TemporalDenoiseParams) -> Self {
        Self {
            previous: None,
            params,
        }
    }

    pub fn previous(&self) -> Option<&RawFrame> {
        self.previous.as_ref()
    }
}

/// Best block-match displacement: previous-frame block at (bx+dx, by+dy)
/// against the current block at (bx, by).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMatch {
    pub dx: isize,
    pub dy: isize,
    pub sad_mean: f64,
}

/// Exhaustively searches displacements within the radius (fully in-bounds
/// candidates only) minimizing the sum of absolute differences; ties prefer the
/// smaller displacement magnitude, then the earlier candidate in row-major
/// (dy outer, dx inner) scan order.
pub fn match_block(
    previous: &RawFrame,
    current: &RawFrame,
    bx: usize,
    by: usize,
    bw: usize,
    bh: usize,
    search_radius: usize,
) -> BlockMatch {
    let (w, h) = (current.width() as isize, current.height() as isize);
    let r = search_radius as isize;
    let mut best: Option<(u64, i64, isize, isize)> = None;
    for dy in -r..=r {
        let ty = by as isize + dy;
        if ty < 0 || ty + bh as isize > h {
            continue;
        }
        for dx in -r..=r {
            let tx = bx as isize + dx;
            if tx < 0 || tx + bw as isize > w {
                continue;
            }
            let mut sad = 0u64;
            for y in 0..bh {
                for x in 0..bw {
                    let c = current.at(bx + x, by + y) as i64;
                    let p = previous.at((tx + x as isize) as usize, (ty + y as isize) as usize)
                        as i64;
                    sad += c.abs_diff(p);
                }
            }
            let mag = (dx * dx + dy * dy) as i64;
            if best.map_or(true, |(bs, bm, ..)| sad < bs || (sad == bs && mag < bm)) {
                best = Some((sad, mag, dx, dy));
            }
        }
    }
    let (sad, _, dx, dy) = best.expect("zero displacement is always a valid candidate");
    BlockMatch {
        dx,
        dy,
        sad_mean: sad as f64 / (bw * bh) as f64,
    }
}

/// Runs one frame through the temporal denoiser. The first frame passes through
/// and seeds the state; later frames blend per block with the motion-compensated
/// previous output, falling back to the plain current block when the best match
/// is still worse than sad_reject per pixel.
pub fn temporal_denoise(
    state: TdnState,
    frame: &RawFrame,
    params: &TemporalDenoiseParams,
) -> Result<(RawFrame, TdnState)> {
    params.validate()?;
    if state.params != *params {
        return Err(Error::StateParamMismatch);
    }
    let previous = match &state.previous {
        None => {
            let out = frame.clone();
            return Ok((
                out.clone(),
                TdnState {
                    previous: Some(out),
                    params: params.clone(),
                },
            ));
        }
        Some(p) => {
            if p.width() != frame.width() || p.height() != frame.height() {
                return Err(Error::DimensionMismatch(format!(
                    "stream changed from {}x{} to {}x{}",
                    p.width(),
                    p.height(),
                    frame.width(),
                    frame.height()
                )));
            }
            if p.bit_depth() != frame.bit_depth() {
                return Err(Error::DepthMismatch(format!(
                    "stream changed depth from {} to {}",
                    p.bit_depth(),
                    frame.bit_depth()
                )));
            }
            p
        }
    };

    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let alpha = params.blend_alpha;
    let mut out = frame.samples().to_vec();
    for by in (0..h).step_by(params.block) {
        let bh = params.block.min(h - by);
        for bx in (0..w).step_by(params.block) {
            let bw = params.block.min(w - bx);
            let m = match_block(previous, frame, bx, by, bw, bh, params.search_radius);
            if m.sad_mean > params.sad_reject {
                continue; // keep the current block
            }
            for y in 0..bh {
                for x in 0..bw {
                    let c = frame.at(bx + x, by + y) as f64;
                    let p = previous.at(
                        (bx as isize + m.dx) as usize + x,
                        (by as isize + m.dy) as usize + y,
                    ) as f64;
                    out[(by + y) * w + bx + x] =
                        ((1.0 - alpha) * c + alpha * p).round() as u16;
                }
            }
        }
    }
    let out = frame.with_samples(out);
    Ok((
        out.clone(),
        TdnState {
            previous: Some(out),
            params: params.clone(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::DEFAULT_BIT_DEPTH;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn frame_from(width: u16, height: u16, samples: Vec<u16>) -> RawFrame {
        RawFrame::new(width, height, DEFAULT_BIT_DEPTH, 25.0, samples).unwrap()
    }

    fn textured(width: usize, height: usize, seed: u64) -> Vec<u16> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..width * height)
            .map(|_| rng.random_range(1000..5000) as u16)
            .collect()
    }

    #[test]
    fn identical_frames_pass_through_bit_exactly() {
        let frame = frame_from(32, 32, textured(32, 32, 1));
        let params = TemporalDenoiseParams::default();
        let state = TdnState::new(params.clone());
        let (first, state) = temporal_denoise(state, &frame, &params).unwrap();
        assert_eq!(first, frame);
        let (second, _) = temporal_denoise(state, &frame, &params).unwrap();
        assert_eq!(second, frame);
    }

    #[test]
    fn global_translation_recovered_for_interior_blocks() {
        let (w, h) = (64usize, 48usize);
        let base = textured(w + 8, h, 2);
        let prev: Vec<u16> = (0..w * h).map(|i| base[(i / w) * (w + 8) + i % w]).collect();
        // Current frame content moves left by 8: current(x) = previous_scene(x+8).
        let cur: Vec<u16> = (0..w * h)
            .map(|i| base[(i / w) * (w + 8) + i % w + 8])
            .collect();
        let prev = frame_from(w as u16, h as u16, prev);
        let cur = frame_from(w as u16, h as u16, cur);
        for by in (0..h).step_by(16) {
            for bx in (0..w).step_by(16) {
                if bx + 16 + 8 > w {
                    continue; // the rightmost strip has no perfect match
                }
                let m = match_block(&prev, &cur, bx, by, 16, 16, 8);
                assert_eq!((m.dx, m.dy), (8, 0), "block at ({bx},{by})");
                assert_eq!(m.sad_mean, 0.0);
            }
        }
    }

    #[test]
    fn constant_frames_match_at_zero_displacement() {
        let prev = frame_from(32, 32, vec![2000; 1024]);
        let cur = frame_from(32, 32, vec![2000; 1024]);
        let m = match_block(&prev, &cur, 8, 8, 16, 16, 8);
        assert_eq!((m.dx, m.dy, m.sad_mean), (0, 0, 0.0));
    }

    #[test]
    fn noise_stream_converges_below_input_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = Normal::new(0.0, 16.0).unwrap();
        let params = TemporalDenoiseParams::default();
        let mut state = TdnState::new(params.clone());
        let mut last = None;
        for _ in 0..10 {
            let samples: Vec<u16> = (0..48 * 48)
                .map(|_| (3000.0f64 + normal.sample(&mut rng)).round() as u16)
                .collect();
            let frame = frame_from(48, 48, samples);
            let (out, next) = temporal_denoise(state, &frame, &params).unwrap();
            state = next;
            last = Some(out);
        }
        let residual: Vec<f64> = last
            .unwrap()
            .samples()
            .iter()
            .map(|&v| v as f64 - 3000.0)
            .collect();
        let mean = residual.iter().sum::<f64>() / residual.len() as f64;
        let var = residual.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
            / residual.len() as f64;
        assert!(
            var.sqrt() <= 0.7 * 16.0,
            "residual std {:.2} above 0.7 sigma",
            var.sqrt()
        );
    }

    #[test]
    fn zero_alpha_is_identity_after_first_frame() {
        let params = TemporalDenoiseParams {
            blend_alpha: 0.0,
            ..Default::default()
        };
        let mut state = TdnState::new(params.clone());
        for seed in 0..3 {
            let frame = frame_from(32, 32, textured(32, 32, seed));
            let (out, next) = temporal_denoise(state, &frame, &params).unwrap();
            assert_eq!(out, frame);
            state = next;
        }
    }

    #[test]
    fn unmatched_blocks_fall_back_to_current() {
        let params = TemporalDenoiseParams::default();
        let state = TdnState::new(params.clone());
        let dark = frame_from(32, 32, vec![1000; 1024]);
        let bright = frame_from(32, 32, vec![9000; 1024]);
        let (_, state) = temporal_denoise(state, &dark, &params).unwrap();
        let (out, _) = temporal_denoise(state, &bright, &params).unwrap();
        assert_eq!(out, bright); // SAD mean 8000 is far above sad_reject
    }

    #[test]
    fn parameter_echo_enforced() {
        let params = TemporalDenoiseParams::default();
        let state = TdnState::new(params.clone());
        let other = TemporalDenoiseParams {
            blend_alpha: 0.25,
            ..Default::default()
        };
        let frame = frame_from(16, 16, vec![0; 256]);
        assert!(matches!(
            temporal_denoise(state, &frame, &other).unwrap_err(),
            Error::StateParamMismatch
        ));
    }

    #[test]
    fn partial_edge_blocks_are_processed() {
        // 40 is not a multiple of 16: right/bottom blocks are 8 wide/high.
        let params = TemporalDenoiseParams::default();
        let state = TdnState::new(params.clone());
        let a = frame_from(40, 40, vec![2000; 1600]);
        let mut b_samples = vec![2000u16; 1600];
        for s in &mut b_samples {
            *s += 10;
        }
        let b = frame_from(40, 40, b_samples);
        let (_, state) = temporal_denoise(state, &a, &params).unwrap();
        let (out, _) = temporal_denoise(state, &b, &params).unwrap();
        // Every pixel, including partial blocks, blends 2010 with 2000.
        assert!(out.samples().iter().all(|&s| s == 2005));
    }

    #[test]
    fn alpha_validation() {
        let bad = TemporalDenoiseParams {
            blend_alpha: 1.0,
            ..Default::default()
        };
        let state = TdnState::new(bad.clone());
        let frame = frame_from(16, 16, vec![0; 256]);
        assert!(temporal_denoise(state, &frame, &bad).is_err());
    }
}
