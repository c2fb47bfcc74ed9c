//! Spatial denoising: bilateral filtering or non-local means.

use crate::error::{Error, Result};
use crate::frame::RawFrame;
use crate::stages::mirror;

/// Spatial denoiser selection with per-method parameters.
///
/// Bilateral weights are Gaussian in both distance and sample difference over a
/// window of radius ceil(3 * sigma_spatial). Non-local means compares Gaussian-
/// weighted patches across a search window and averages with weights
/// exp(-d^2 / h^2). Both use mirror boundaries.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialDenoiseParams {
    Bilateral { sigma_spatial: f64, sigma_range: f64 },
    Nlm { patch_radius: usize, search_radius: usize, h: f64 },
}

impl Default for SpatialDenoiseParams {
    fn default() -> Self {
        Self::Bilateral {
            sigma_spatial: 3.0,
            sigma_range: 60.0,
        }
    }
}

impl SpatialDenoiseParams {
    pub fn nlm_default() -> Self {
        Self::Nlm {
            patch_radius: 3,
            search_radius: 10,
            h: 40.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Bilateral {
                sigma_spatial,
                sigma_range,
            } => {
                if !(sigma_spatial > 0.0) || !(sigma_range > 0.0) {
                    return Err(Error::InvalidParam(format!(
                        "bilateral sigmas must be positive, got {sigma_spatial}/{sigma_range}"
                    )));
                }
            }
            Self::Nlm {
                patch_radius,
                search_radius,
                h,
            } => {
                if patch_radius < 1 || search_radius < 1 {
                    return Err(Error::InvalidParam(format!(
                        "NLM radii must be at least 1, got {patch_radius}/{search_radius}"
                    )));
                }
                if !(h > 0.0) {
                    return Err(Error::InvalidParam(format!("NLM strength h = {h}")));
                }
            }
        }
        Ok(())
    }
}

pub fn spatial_denoise(frame: &RawFrame, params: &SpatialDenoiseParams) -> Result<RawFrame> {
    params.validate()?;
    let out = match *params {
        SpatialDenoiseParams::Bilateral {
            sigma_spatial,
            sigma_range,
        } => bilateral(frame, sigma_spatial, sigma_range),
        SpatialDenoiseParams::Nlm {
            patch_radius,
            search_radius,
            h,
        } => nlm(frame, patch_radius, search_radius, h),
    };
    Ok(frame.with_samples(out))
}

fn bilateral(frame: &RawFrame, sigma_spatial: f64, sigma_range: f64) -> Vec<u16> {
    let radius = (3.0 * sigma_spatial).ceil() as isize;
    let size = (2 * radius + 1) as usize;
    let mut spatial = vec![0.0; size * size];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let d2 = (dx * dx + dy * dy) as f64;
            spatial[((dy + radius) * (2 * radius + 1) + dx + radius) as usize] =
                (-d2 / (2.0 * sigma_spatial * sigma_spatial)).exp();
        }
    }
    // Range weights indexed by absolute sample difference.
    let range: Vec<f64> = (0..=frame.max_value() as usize)
        .map(|d| {
            let d = d as f64;
            (-d * d / (2.0 * sigma_range * sigma_range)).exp()
        })
        .collect();

    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let samples = frame.samples();
    let mut out = vec![0u16; samples.len()];
    for y in 0..h {
        for x in 0..w {
            let center = samples[y * w + x] as i32;
            let mut wsum = 0.0;
            let mut vsum = 0.0;
            for dy in -radius..=radius {
                let ny = mirror(y as isize + dy, h);
                for dx in -radius..=radius {
                    let nx = mirror(x as isize + dx, w);
                    let v = samples[ny * w + nx];
                    let weight = spatial
                        [((dy + radius) * (2 * radius + 1) + dx + radius) as usize]
                        * range[(v as i32 - center).unsigned_abs() as usize];
                    wsum += weight;
                    vsum += weight * v as f64;
                }
            }
            out[y * w + x] = (vsum / wsum).round() as u16;
        }
    }
    out
}

fn nlm(frame: &RawFrame, patch_radius: usize, search_radius: usize, h: f64) -> Vec<u16> {
    let pr = patch_radius as isize;
    let sr = search_radius as isize;
    let sigma_p = patch_radius as f64 / 2.0;
    let psize = (2 * pr + 1) as usize;
    let mut patch_w = vec![0.0; psize * psize];
    for dy in -pr..=pr {
        for dx in -pr..=pr {
            let d2 = (dx * dx + dy * dy) as f64;
            patch_w[((dy + pr) * (2 * pr + 1) + dx + pr) as usize] =
                (-d2 / (2.0 * sigma_p * sigma_p)).exp();
        }
    }
    let total: f64 = patch_w.iter().sum();
    for w in &mut patch_w {
        *w /= total;
    }

    let (w, ht) = (frame.width() as usize, frame.height() as usize);
    let samples = frame.samples();
    let at = |x: isize, y: isize| samples[mirror(y, ht) * w + mirror(x, w)] as f64;
    let mut out = vec![0u16; samples.len()];
    for y in 0..ht as isize {
        for x in 0..w as isize {
            let mut wsum = 0.0;
            let mut vsum = 0.0;
            for dy in -sr..=sr {
                for dx in -sr..=sr {
                    let mut dist2 = 0.0;
                    for py in -pr..=pr {
                        for px in -pr..=pr {
                            let a = at(x + px, y + py);
                            let b = at(x + dx + px, y + dy + py);
                            dist2 += patch_w[((py + pr) * (2 * pr + 1) + px + pr) as usize]
                                * (a - b)
                                * (a - b);
                        }
                    }
                    let weight = (-dist2 / (h * h)).exp();
                    wsum += weight;
                    vsum += weight * at(x + dx, y + dy);
                }
            }
            out[(y * w as isize + x) as usize] = (vsum / wsum).round() as u16;
        }
    }
    out
}
