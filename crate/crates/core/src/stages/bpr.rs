//! Bad-pixel replacement: flagged pixels become a weighted mean of their
//! valid 5x5 neighborhood.

use crate::error::{Error, Result};
use crate::frame::RawFrame;
use crate::nuc::BadPixelMap;

/// 5x5 replacement kernel; the default is the outer product of [1,4,6,4,1]
/// with the center weight zeroed, renormalized per pixel over the neighbors
/// that are in-bounds and not themselves flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct BprParams {
    pub kernel: [[f64; 5]; 5],
}

impl Default for BprParams {
    fn default() -> Self {
        let base = [1.0, 4.0, 6.0, 4.0, 1.0];
        let mut kernel = [[0.0; 5]; 5];
        for (y, row) in kernel.iter_mut().enumerate() {
            for (x, w) in row.iter_mut().enumerate() {
                *w = base[y] * base[x];
            }
        }
        kernel[2][2] = 0.0;
        Self { kernel }
    }
}

impl BprParams {
    fn validate(&self) -> Result<()> {
        if self.kernel[2][2] != 0.0 {
            return Err(Error::InvalidParam(
                "BPR kernel center weight must be 0".into(),
            ));
        }
        let mut any_positive = false;
        for row in &self.kernel {
            for &w in row {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidParam(format!("BPR kernel weight {w}")));
                }
                any_positive |= w > 0.0;
            }
        }
        if !any_positive {
            return Err(Error::InvalidParam(
                "BPR kernel has no positive weight".into(),
            ));
        }
        Ok(())
    }
}

/// Median sample of a frame; even pixel counts take the rounded midpoint.
fn frame_median(frame: &RawFrame) -> u16 {
    let mut sorted = frame.samples().to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        let mid = (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0;
        mid.round() as u16
    }
}

/// Replaces every flagged pixel with the kernel-weighted mean of its in-bounds,
/// non-flagged 5x5 neighbors (weights renormalized over the contributors), reading
/// only original values so adjacent defects cannot feed each other. A defect with
/// no valid neighbor at all falls back to the frame median. Non-flagged pixels
/// are copied bit-exactly.
pub fn replace_bad_pixels(
    frame: &RawFrame,
    map: &BadPixelMap,
    params: &BprParams,
) -> Result<RawFrame> {
    params.validate()?;
    if frame.width() != map.width() || frame.height() != map.height() {
        return Err(Error::DimensionMismatch(format!(
            "frame {}x{} vs bad-pixel map {}x{}",
            frame.width(),
            frame.height(),
            map.width(),
            map.height()
        )));
    }
    let (w, h) = (frame.width() as isize, frame.height() as isize);
    let mut out = frame.samples().to_vec();
    let mut median = None;
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as usize;
            if !map.is_bad(idx) {
                continue;
            }
            let mut wsum = 0.0;
            let mut vsum = 0.0;
            for dy in -2..=2isize {
                for dx in -2..=2isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || nx >= w || ny < 0 || ny >= h {
                        continue;
                    }
                    let nidx = (ny * w + nx) as usize;
                    if map.is_bad(nidx) {
                        continue;
                    }
                    let weight = params.kernel[(dy + 2) as usize][(dx + 2) as usize];
                    wsum += weight;
                    vsum += weight * frame.samples()[nidx] as f64;
                }
            }
            out[idx] = if wsum > 0.0 {
                (vsum / wsum).round() as u16
            } else {
                *median.get_or_insert_with(|| frame_median(frame))
            };
        }
    }
    Ok(frame.with_samples(out))
}
