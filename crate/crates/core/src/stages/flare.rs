//! Flare correction: estimates a smooth background as a wide Gaussian blur and
//! removes most of its deviation from the global mean, flattening large-scale
//! illumination gradients without touching local contrast.

use crate::error::{Error, Result};
use crate::frame::RawFrame;
use crate::stages::mirror;

/// Flare parameters. A background sigma of `None` defaults to width/8 at apply
/// time; max_removal_fraction is how much of the estimated flare is subtracted.
#[derive(Debug, Clone, PartialEq)]
pub struct FlareParams {
    pub background_sigma: Option<f64>,
    pub max_removal_fraction: f64,
}

impl Default for FlareParams {
    fn default() -> Self {
        Self {
            background_sigma: None,
            max_removal_fraction: 0.9,
        }
    }
}

/// Separable Gaussian blur with mirror boundaries, radius ceil(3 sigma).
fn gaussian_blur(samples: &[u16], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|j| (-(j * j) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= total;
    }

    let mut horizontal = vec![0.0; samples.len()];
    for y in 0..height {
        let row = &samples[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, j) in kernel.iter().zip(-radius..=radius) {
                acc += k * row[mirror(x as isize + j, width)] as f64;
            }
            horizontal[y * width + x] = acc;
        }
    }
    let mut blurred = vec![0.0; samples.len()];
    for x in 0..width {
        for y in 0..height {
            let mut acc = 0.0;
            for (k, j) in kernel.iter().zip(-radius..=radius) {
                acc += k * horizontal[mirror(y as isize + j, height) * width + x];
            }
            blurred[y * width + x] = acc;
        }
    }
    blurred
}

/// Subtracts max_removal_fraction of the background's deviation from the
/// background mean. Because the subtracted field is exactly zero-mean, the
/// frame's global mean is preserved to within rounding.
pub fn flare_correct(frame: &RawFrame, params: &FlareParams) -> Result<RawFrame> {
    let sigma = params
        .background_sigma
        .unwrap_or(frame.width() as f64 / 8.0);
    if !(sigma >= 4.0) {
        return Err(Error::InvalidParam(format!(
            "background sigma {sigma} below minimum 4"
        )));
    }
    if !(0.0..=1.0).contains(&params.max_removal_fraction) {
        return Err(Error::InvalidParam(format!(
            "removal fraction {} outside [0, 1]",
            params.max_removal_fraction
        )));
    }
    let (width, height) = (frame.width() as usize, frame.height() as usize);
    let background = gaussian_blur(frame.samples(), width, height, sigma);
    let bg_mean = background.iter().sum::<f64>() / background.len() as f64;
    let f = params.max_removal_fraction;
    let max = frame.max_value() as f64;
    let out = frame
        .samples()
        .iter()
        .zip(&background)
        .map(|(&v, &bg)| (v as f64 - f * (bg - bg_mean)).round().clamp(0.0, max) as u16)
        .collect();
    Ok(frame.with_samples(out))
}
