//! Column destriping: estimates per-column offsets as the deviation of each
//! column mean from a smoothed column-mean profile, and subtracts them.

use crate::error::{Error, Result};
use crate::frame::RawFrame;
use crate::stages::mirror;

/// Destriping parameters: the width (odd, in columns) of the centered moving
/// average that separates the genuine horizontal scene profile from stripe noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DestripeParams {
    pub smooth_window: usize,
}

impl Default for DestripeParams {
    fn default() -> Self {
        Self { smooth_window: 9 }
    }
}

/// Centered moving average of `window` values under mirror padding.
pub(crate) fn smooth_means(means: &[f64], window: usize) -> Vec<f64> {
    let r = (window / 2) as isize;
    let n = means.len();
    (0..n as isize)
        .map(|c| {
            let mut sum = 0.0;
            for j in -r..=r {
                sum += means[mirror(c + j, n)];
            }
            sum / window as f64
        })
        .collect()
}

/// Removes per-column offsets: with m_c the column means and s_c their moving
/// average, every pixel of column c has (m_c - s_c) subtracted, then rounds
/// and clamps. Scene structure wider than the smoothing window passes through.
pub fn destripe(frame: &RawFrame, params: &DestripeParams) -> Result<RawFrame> {
    let w = params.smooth_window;
    if w < 3 || w % 2 == 0 {
        return Err(Error::InvalidParam(format!(
            "smoothing window {w} must be odd and at least 3"
        )));
    }
    if w > frame.width() as usize {
        return Err(Error::InvalidParam(format!(
            "smoothing window {w} exceeds frame width {}",
            frame.width()
        )));
    }
    let (width, height) = (frame.width() as usize, frame.height() as usize);
    let mut col_sums = vec![0u64; width];
    for row in frame.samples().chunks_exact(width) {
        for (sum, &v) in col_sums.iter_mut().zip(row) {
            *sum += v as u64;
        }
    }
    let means: Vec<f64> = col_sums
        .iter()
        .map(|&s| s as f64 / height as f64)
        .collect();
    let smoothed = smooth_means(&means, w);
    let stripe: Vec<f64> = means
        .iter()
        .zip(&smoothed)
        .map(|(&m, &s)| m - s)
        .collect();
    let max = frame.max_value() as f64;
    let out = frame
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &v)| (v as f64 - stripe[i % width]).round().clamp(0.0, max) as u16)
        .collect();
    Ok(frame.with_samples(out))
}
