//! Frame types for raw sensor data, 8-bit display output, frame stacks, and statistics.

use crate::error::{Error, Result};

/// Default sensor bit depth. 14-bit encoding is typical for microbolometer raws even
/// though the effective scene range usually spans only around 2^10 of it.
pub const DEFAULT_BIT_DEPTH: u16 = 14;

/// Smallest frame edge supported; 5x5 kernels and block matching need the margin.
pub const MIN_DIMENSION: u16 = 16;

/// Largest sample representable at a given bit depth.
pub fn max_sample(bit_depth: u16) -> u16 {
    debug_assert!((8..=16).contains(&bit_depth));
    (((1u32 << bit_depth) - 1) & 0xffff) as u16
}

/// A single raw frame: row-major 16-bit samples of which `bit_depth` bits are meaningful,
/// plus the focal-plane-array temperature at capture time.
///
/// Samples are stored as full 16-bit words regardless of `bit_depth`; the depth is
/// metadata bounding the valid range `[0, 2^bit_depth - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame {
    width: u16,
    height: u16,
    bit_depth: u16,
    fpa_temp_c: f64,
    samples: Vec<u16>,
}

impl RawFrame {
    /// Builds a frame, validating every invariant.
    pub fn new(
        width: u16,
        height: u16,
        bit_depth: u16,
        fpa_temp_c: f64,
        samples: Vec<u16>,
    ) -> Result<Self> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::InvalidParam(format!(
                "frame dimensions {width}x{height} below minimum {MIN_DIMENSION}"
            )));
        }
        if !(8..=16).contains(&bit_depth) {
            return Err(Error::InvalidParam(format!(
                "bit depth {bit_depth} outside supported range 8..=16"
            )));
        }
        if !fpa_temp_c.is_finite() || !(-40.0..=120.0).contains(&fpa_temp_c) {
            return Err(Error::InvalidParam(format!(
                "FPA temperature {fpa_temp_c} outside [-40, 120]"
            )));
        }
        if samples.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} frame",
                samples.len()
            )));
        }
        let max = max_sample(bit_depth);
        if let Some(&bad) = samples.iter().find(|&&s| s > max) {
            return Err(Error::DepthOverflow {
                value: bad,
                bit_depth,
            });
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            fpa_temp_c,
            samples,
        })
    }

    /// Rebuilds a frame with new samples, keeping dimensions, depth, and FPA temperature.
    ///
    /// Intended for correction stages whose outputs are already clamped to the valid range.
    pub(crate) fn with_samples(&self, samples: Vec<u16>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        debug_assert!(samples.iter().all(|&s| s <= max_sample(self.bit_depth)));
        Self {
            samples,
            fpa_temp_c: self.fpa_temp_c,
            ..*self
        }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn bit_depth(&self) -> u16 {
        self.bit_depth
    }

    pub fn fpa_temp_c(&self) -> f64 {
        self.fpa_temp_c
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest valid sample for this frame's depth.
    pub fn max_value(&self) -> u16 {
        max_sample(self.bit_depth)
    }

    /// Sample at (x, y); callers must stay in bounds.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u16 {
        debug_assert!(x < self.width as usize && y < self.height as usize);
        self.samples[y * self.width as usize + x]
    }
}

/// An 8-bit display frame produced by tonemapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplayFrame {
    width: u16,
    height: u16,
    samples: Vec<u8>,
}

impl DisplayFrame {
    pub fn new(width: u16, height: u16, samples: Vec<u8>) -> Result<Self> {
        if samples.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} display frame",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    /// Widens into an 8-bit-depth raw frame so display output can enter stacks and files.
    pub fn to_raw(&self, fpa_temp_c: f64) -> Result<RawFrame> {
        RawFrame::new(
            self.width,
            self.height,
            8,
            fpa_temp_c,
            self.samples.iter().map(|&s| s as u16).collect(),
        )
    }
}

/// An ordered, dimension- and depth-homogeneous list of raw frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    frames: Vec<RawFrame>,
    source_tag: String,
}

impl FrameStack {
    pub fn new(frames: Vec<RawFrame>, source_tag: impl Into<String>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyStack)?;
        let (w, h, d) = (first.width(), first.height(), first.bit_depth());
        for f in &frames {
            if f.width() != w || f.height() != h {
                return Err(Error::DimensionMismatch(format!(
                    "stack mixes {w}x{h} and {}x{} frames",
                    f.width(),
                    f.height()
                )));
            }
            if f.bit_depth() != d {
                return Err(Error::DepthMismatch(format!(
                    "stack mixes bit depths {d} and {}",
                    f.bit_depth()
                )));
            }
        }
        Ok(Self {
            frames,
            source_tag: source_tag.into(),
        })
    }

    pub fn frames(&self) -> &[RawFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> u16 {
        self.frames[0].width()
    }

    pub fn height(&self) -> u16 {
        self.frames[0].height()
    }

    pub fn bit_depth(&self) -> u16 {
        self.frames[0].bit_depth()
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }
}

/// Exact population statistics of one frame, with a full-resolution histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStats {
    pub mean: f64,
    /// Population standard deviation (divide by N, not N-1), so statistics of tiny
    /// frames are deterministic and std3 tonemapping needs no sample-size caveats.
    pub std: f64,
    pub min: u16,
    pub max: u16,
    /// `histogram[v]` counts samples equal to `v`; length is `2^bit_depth`.
    pub histogram: Vec<u64>,
}

/// Computes exact statistics: integer-sum mean, two-pass population variance, histogram.
pub fn frame_stats(frame: &RawFrame) -> FrameStats {
    let n = frame.len() as f64;
    let mut histogram = vec![0u64; 1usize << frame.bit_depth()];
    let mut sum = 0u64;
    let mut min = u16::MAX;
    let mut max = 0u16;
    for &s in frame.samples() {
        histogram[s as usize] += 1;
        sum += s as u64;
        min = min.min(s);
        max = max.max(s);
    }
    let mean = sum as f64 / n;
    let ss: f64 = frame
        .samples()
        .iter()
        .map(|&s| {
            let d = s as f64 - mean;
            d * d
        })
        .sum();
    let std = (ss / n).sqrt();
    FrameStats {
        mean,
        std,
        min,
        max,
        histogram,
    }
}
