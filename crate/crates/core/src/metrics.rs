//! Image-quality metrics scored against simulator ground truth.
//!
//! RNU (residual non-uniformity) is the figure of merit for correction
//! quality on flat fields; PSNR scores against a clean reference when one
//! exists; CNI isolates the column-stripe component that destriping targets.

use crate::error::{Error, Result};
use crate::frame::{frame_stats, DisplayFrame, RawFrame};
use crate::stages::smooth_means;

/// Window used to detrend column means before measuring column noise.
const CNI_MAX_WINDOW: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityMetrics {
    /// 100 · spatial std / spatial mean; 0 when the mean is not positive.
    pub rnu_percent: f64,
    /// 20·log10(peak/rmse) against the clean reference, capped at 99 dB;
    /// absent when no reference was provided.
    pub psnr_db: Option<f64>,
    /// Column-noise index: std of detrended column means over interior columns.
    pub cni: f64,
}

/// Scores a corrected frame. RNU is only meaningful on flat fields; PSNR
/// requires the clean reference to share dimensions and bit depth.
pub fn quality_metrics(
    corrected: &RawFrame,
    clean: Option<&RawFrame>,
) -> Result<QualityMetrics> {
    let stats = frame_stats(corrected);
    let rnu_percent = if stats.mean > 0.0 {
        100.0 * stats.std / stats.mean
    } else {
        0.0
    };

    let psnr_db = match clean {
        None => None,
        Some(reference) => {
            if reference.width() != corrected.width() || reference.height() != corrected.height()
            {
                return Err(Error::DimensionMismatch(format!(
                    "clean reference {}x{} vs corrected {}x{}",
                    reference.width(),
                    reference.height(),
                    corrected.width(),
                    corrected.height()
                )));
            }
            if reference.bit_depth() != corrected.bit_depth() {
                return Err(Error::DepthMismatch(format!(
                    "clean reference {} bits vs corrected {}",
                    reference.bit_depth(),
                    corrected.bit_depth()
                )));
            }
            let sq: u64 = corrected
                .samples()
                .iter()
                .zip(reference.samples())
                .map(|(&a, &b)| {
                    let d = a.abs_diff(b) as u64;
                    d * d
                })
                .sum();
            let rmse = (sq as f64 / corrected.len() as f64).sqrt();
            let peak = corrected.max_value() as f64;
            Some(if rmse == 0.0 {
                99.0
            } else {
                (20.0 * (peak / rmse).log10()).min(99.0)
            })
        }
    };

    Ok(QualityMetrics {
        rnu_percent,
        psnr_db,
        cni: column_noise_index(corrected),
    })
}

/// Std of (column mean − smoothed column mean) over interior columns, i.e.
/// the column structure that survives after removing slow scene trends with
/// the destriping smoother. Edge columns are excluded because the mirror
/// padding biases their residuals.
fn column_noise_index(frame: &RawFrame) -> f64 {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let mut means = vec![0.0f64; w];
    for x in 0..w {
        let mut sum = 0u64;
        for y in 0..h {
            sum += frame.at(x, y) as u64;
        }
        means[x] = sum as f64 / h as f64;
    }
    let mut window = CNI_MAX_WINDOW.min(w);
    if window % 2 == 0 {
        window -= 1;
    }
    let smooth = smooth_means(&means, window);
    let half = window / 2;
    let interior: Vec<f64> = (half..w - half).map(|x| means[x] - smooth[x]).collect();
    if interior.is_empty() {
        return 0.0;
    }
    let n = interior.len() as f64;
    let mean = interior.iter().sum::<f64>() / n;
    (interior.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt()
}

/// Shannon entropy (bits) of a display frame's 8-bit histogram.
pub fn display_entropy(frame: &DisplayFrame) -> f64 {
    let mut hist = [0u64; 256];
    for &v in frame.samples() {
        hist[v as usize] += 1;
    }
    let n = frame.samples().len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Fraction of display pixels saturated at either end of the 8-bit range.
pub fn clipped_fraction(frame: &DisplayFrame) -> f64 {
    let clipped = frame
        .samples()
        .iter()
        .filter(|&&v| v == 0 || v == 255)
        .count();
    clipped as f64 / frame.samples().len() as f64
}
