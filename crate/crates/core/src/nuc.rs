//! Non-uniformity correction: calibration-table estimation and application.
//!
//! The correction model is affine per pixel with a linear ambient-drift term on
//! the offset only:
//!
//! corrected_i = gain_i * raw_i + offset_i + drift_slope_i * (fpa_temp_c - t_amb_ref_c)
//!
//! Shutter (two-point) calibration solves gain and offset from cold/hot flat-field
//! stacks at one ambient temperature; shutterless (three-reference) calibration adds
//! a stack at a second ambient temperature and fits the offset drift per degree.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::frame::{FrameStack, RawFrame};

/// Pixels whose hot/cold response difference is below this many LSB are treated
/// as non-responsive; it sits below typical temporal noise and avoids gain blow-up.
pub const RESPONSIVITY_FLOOR: f64 = 8.0;

/// Valid gain range for a working pixel.
pub const GAIN_RANGE: (f64, f64) = (0.1, 10.0);

/// Flagged fraction at or above which calibration aborts: the sensor is unusable.
pub const MAX_BAD_FRACTION: f64 = 0.05;

const MIN_REF_FRAMES: usize = 2;

/// Calibration flavor: shutter tables re-anchor offsets in the field; shutterless
/// tables carry an ambient-drift slope instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CalMode {
    #[default]
    Shutter,
    Shutterless,
}

/// Reference temperatures for calibration: two scene setpoints, one or two
/// ambient temperatures, and (shutterless only) the scene seen by the third stack.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSetpoints {
    pub t_scene_cold_c: f64,
    pub t_scene_hot_c: f64,
    pub t_amb_1_c: f64,
    /// Second ambient temperature; present iff shutterless.
    pub t_amb_2_c: Option<f64>,
    /// Scene temperature of the third reference stack; must equal one of the
    /// two scene setpoints. Present iff shutterless.
    pub t_scene_3_c: Option<f64>,
}

fn check_setpoint_range(what: &str, t: f64) -> Result<()> {
    if !t.is_finite() || !(-20.0..=60.0).contains(&t) {
        return Err(Error::InvalidParam(format!(
            "{what} = {t} outside setpoint range [-20, 60]"
        )));
    }
    Ok(())
}

impl CalibrationSetpoints {
    pub fn shutter(t_scene_cold_c: f64, t_scene_hot_c: f64, t_amb_c: f64) -> Result<Self> {
        check_setpoint_range("cold scene temperature", t_scene_cold_c)?;
        check_setpoint_range("hot scene temperature", t_scene_hot_c)?;
        check_setpoint_range("ambient temperature", t_amb_c)?;
        if t_scene_hot_c <= t_scene_cold_c {
            return Err(Error::InvalidParam(format!(
                "hot setpoint {t_scene_hot_c} not above cold setpoint {t_scene_cold_c}"
            )));
        }
        Ok(Self {
            t_scene_cold_c,
            t_scene_hot_c,
            t_amb_1_c: t_amb_c,
            t_amb_2_c: None,
            t_scene_3_c: None,
        })
    }

    pub fn shutterless(
        t_scene_cold_c: f64,
        t_scene_hot_c: f64,
        t_amb_1_c: f64,
        t_amb_2_c: f64,
        t_scene_3_c: f64,
    ) -> Result<Self> {
        let mut sp = Self::shutter(t_scene_cold_c, t_scene_hot_c, t_amb_1_c)?;
        check_setpoint_range("second ambient temperature", t_amb_2_c)?;
        check_setpoint_range("third scene temperature", t_scene_3_c)?;
        if t_scene_3_c != t_scene_cold_c && t_scene_3_c != t_scene_hot_c {
            return Err(Error::InvalidParam(format!(
                "third scene temperature {t_scene_3_c} matches neither setpoint \
                 ({t_scene_cold_c} / {t_scene_hot_c})"
            )));
        }
        sp.t_amb_2_c = Some(t_amb_2_c);
        sp.t_scene_3_c = Some(t_scene_3_c);
        Ok(sp)
    }

    pub fn mode(&self) -> CalMode {
        if self.t_amb_2_c.is_some() {
            CalMode::Shutterless
        } else {
            CalMode::Shutter
        }
    }
}

/// Per-pixel defect flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadPixelMap {
    width: u16,
    height: u16,
    flags: Vec<bool>,
}

impl BadPixelMap {
    pub fn new(width: u16, height: u16, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} flags for a {width}x{height} map",
                flags.len()
            )));
        }
        Ok(Self {
            width,
            height,
            flags,
        })
    }

    pub fn none(width: u16, height: u16) -> Self {
        Self {
            width,
            height,
            flags: vec![false; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    #[inline]
    pub fn is_bad(&self, idx: usize) -> bool {
        self.flags[idx]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.flags.len() as f64
    }
}

/// A complete per-pixel correction table.
///
/// Invariants: non-bad gains are finite and within [0.1, 10]; bad pixels are
/// neutralized to gain 1, offset 0, drift 0 (interpolation is the BPR stage's
/// job); drift_slope is identically zero in shutter mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub mode: CalMode,
    pub width: u16,
    pub height: u16,
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
    pub drift_slope: Vec<f64>,
    pub t_amb_ref_c: f64,
    pub target_cold: f64,
    pub target_hot: f64,
    pub bad_pixels: BadPixelMap,
}

impl CalibrationTable {
    /// A do-nothing table: gain 1, offset 0, drift 0, no bad pixels.
    pub fn identity(mode: CalMode, width: u16, height: u16, t_amb_ref_c: f64) -> Self {
        let n = width as usize * height as usize;
        Self {
            mode,
            width,
            height,
            gain: vec![1.0; n],
            offset: vec![0.0; n],
            drift_slope: vec![0.0; n],
            t_amb_ref_c,
            target_cold: 0.0,
            target_hot: 0.0,
            bad_pixels: BadPixelMap::none(width, height),
        }
    }
}

/// Per-pixel temporal mean of a stack, exact integer sums divided in f64.
pub(crate) fn temporal_mean(stack: &FrameStack) -> Vec<f64> {
    let n = stack.len() as f64;
    let pixels = stack.width() as usize * stack.height() as usize;
    let mut sum = vec![0u64; pixels];
    for frame in stack.frames() {
        for (acc, &s) in sum.iter_mut().zip(frame.samples()) {
            *acc += s as u64;
        }
    }
    sum.into_iter().map(|s| s as f64 / n).collect()
}

/// Per-pixel temporal standard deviation; exactly zero iff the pixel never moves.
pub(crate) fn temporal_std(stack: &FrameStack) -> Vec<f64> {
    let n = stack.len() as u128;
    let pixels = stack.width() as usize * stack.height() as usize;
    let mut sum = vec![0u128; pixels];
    let mut sumsq = vec![0u128; pixels];
    for frame in stack.frames() {
        for (i, &s) in frame.samples().iter().enumerate() {
            sum[i] += s as u128;
            sumsq[i] += (s as u128) * (s as u128);
        }
    }
    sum.iter()
        .zip(&sumsq)
        .map(|(&s, &sq)| {
            if n * sq == s * s {
                0.0
            } else {
                let var = (n * sq - s * s) as f64 / (n * n) as f64;
                var.sqrt()
            }
        })
        .collect()
}

fn check_pair(cold: &FrameStack, hot: &FrameStack) -> Result<()> {
    if cold.width() != hot.width() || cold.height() != hot.height() {
        return Err(Error::DimensionMismatch(format!(
            "cold stack {}x{} vs hot stack {}x{}",
            cold.width(),
            cold.height(),
            hot.width(),
            hot.height()
        )));
    }
    if cold.bit_depth() != hot.bit_depth() {
        return Err(Error::DepthMismatch(format!(
            "cold stack depth {} vs hot stack depth {}",
            cold.bit_depth(),
            hot.bit_depth()
        )));
    }
    for stack in [cold, hot] {
        if stack.len() < MIN_REF_FRAMES {
            return Err(Error::TooFewFrames {
                got: stack.len(),
                needed: MIN_REF_FRAMES,
            });
        }
    }
    Ok(())
}

struct TwoPoint {
    gain: Vec<f64>,
    offset: Vec<f64>,
    target_cold: f64,
    target_hot: f64,
    bad: Vec<bool>,
}

/// Solves the two-point gain/offset system with iterative bad-pixel rejection.
///
/// Flags grow monotonically (responsivity floor first, then out-of-range gains
/// against means over the surviving set), so the loop terminates; the returned
/// gains and targets are consistent with the final survivor set.
fn two_point(c: &[f64], h: &[f64]) -> Result<TwoPoint> {
    let total = c.len();
    let mut bad: Vec<bool> = c
        .iter()
        .zip(h)
        .map(|(&ci, &hi)| (hi - ci).abs() < RESPONSIVITY_FLOOR)
        .collect();
    let mut gain = vec![1.0; total];
    let (mut c_bar, mut h_bar);
    loop {
        let survivors = bad.iter().filter(|&&b| !b).count();
        if total - survivors >= (MAX_BAD_FRACTION * total as f64).ceil() as usize {
            let flagged = total - survivors;
            return Err(Error::TooManyBadPixels {
                flagged,
                total,
                percent: 100.0 * flagged as f64 / total as f64,
            });
        }
        c_bar = mean_over(c, &bad);
        h_bar = mean_over(h, &bad);
        let span = h_bar - c_bar;
        let mut changed = false;
        for i in 0..total {
            if bad[i] {
                continue;
            }
            let g = span / (h[i] - c[i]);
            if !g.is_finite() || g < GAIN_RANGE.0 || g > GAIN_RANGE.1 {
                bad[i] = true;
                changed = true;
            } else {
                gain[i] = g;
            }
        }
        if !changed {
            break;
        }
    }
    let offset = c
        .iter()
        .zip(&gain)
        .zip(&bad)
        .map(|((&ci, &g), &b)| if b { 0.0 } else { c_bar - g * ci })
        .collect();
    for (g, &b) in gain.iter_mut().zip(&bad) {
        if b {
            *g = 1.0;
        }
    }
    Ok(TwoPoint {
        gain,
        offset,
        target_cold: c_bar,
        target_hot: h_bar,
        bad,
    })
}

fn mean_over(values: &[f64], excluded: &[bool]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (v, &skip) in values.iter().zip(excluded) {
        if !skip {
            sum += v;
            n += 1;
        }
    }
    sum / n as f64
}

/// Two-point shutter calibration from cold and hot flat-field stacks.
pub fn calibrate_shutter(
    cold: &FrameStack,
    hot: &FrameStack,
    setpoints: &CalibrationSetpoints,
) -> Result<CalibrationTable> {
    if setpoints.mode() != CalMode::Shutter {
        return Err(Error::InvalidParam(
            "shutter calibration given shutterless setpoints".into(),
        ));
    }
    check_pair(cold, hot)?;
    let tp = two_point(&temporal_mean(cold), &temporal_mean(hot))?;
    let (width, height) = (cold.width(), cold.height());
    Ok(CalibrationTable {
        mode: CalMode::Shutter,
        width,
        height,
        drift_slope: vec![0.0; tp.gain.len()],
        t_amb_ref_c: setpoints.t_amb_1_c,
        target_cold: tp.target_cold,
        target_hot: tp.target_hot,
        bad_pixels: BadPixelMap::new(width, height, tp.bad)?,
        gain: tp.gain,
        offset: tp.offset,
    })
}

/// Three-reference shutterless calibration: two-point solve at the first ambient
/// temperature plus a per-pixel offset-drift slope fitted from the second-ambient
/// stack, so correcting at any FPA temperature extrapolates the offset linearly.
pub fn calibrate_shutterless(
    cold_1: &FrameStack,
    hot_1: &FrameStack,
    ref_2: &FrameStack,
    setpoints: &CalibrationSetpoints,
) -> Result<CalibrationTable> {
    if setpoints.mode() != CalMode::Shutterless {
        return Err(Error::InvalidParam(
            "shutterless calibration given shutter setpoints".into(),
        ));
    }
    let (t_amb_1, t_amb_2) = (setpoints.t_amb_1_c, setpoints.t_amb_2_c.unwrap());
    if (t_amb_2 - t_amb_1).abs() < 1.0 {
        return Err(Error::DegenerateAmbient { t_amb_1, t_amb_2 });
    }
    check_pair(cold_1, hot_1)?;
    check_pair(cold_1, ref_2)?;
    let tp = two_point(&temporal_mean(cold_1), &temporal_mean(hot_1))?;
    let r = temporal_mean(ref_2);
    let target_3 = if setpoints.t_scene_3_c.unwrap() == setpoints.t_scene_cold_c {
        tp.target_cold
    } else {
        tp.target_hot
    };
    let dt = t_amb_2 - t_amb_1;
    let drift_slope = (0..r.len())
        .map(|i| {
            if tp.bad[i] {
                0.0
            } else {
                let o2 = target_3 - tp.gain[i] * r[i];
                (o2 - tp.offset[i]) / dt
            }
        })
        .collect();
    let (width, height) = (cold_1.width(), cold_1.height());
    Ok(CalibrationTable {
        mode: CalMode::Shutterless,
        width,
        height,
        drift_slope,
        t_amb_ref_c: t_amb_1,
        target_cold: tp.target_cold,
        target_hot: tp.target_hot,
        bad_pixels: BadPixelMap::new(width, height, tp.bad)?,
        gain: tp.gain,
        offset: tp.offset,
    })
}

/// Applies the correction; bad pixels pass through untouched for the BPR stage.
pub fn apply_nuc(frame: &RawFrame, table: &CalibrationTable) -> Result<RawFrame> {
    if frame.width() != table.width || frame.height() != table.height {
        return Err(Error::DimensionMismatch(format!(
            "frame {}x{} vs table {}x{}",
            frame.width(),
            frame.height(),
            table.width,
            table.height
        )));
    }
    let dt = frame.fpa_temp_c() - table.t_amb_ref_c;
    let max = frame.max_value() as f64;
    let samples = frame
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &raw)| {
            if table.bad_pixels.is_bad(i) {
                raw
            } else {
                let v = table.gain[i] * raw as f64 + table.offset[i] + table.drift_slope[i] * dt;
                v.round().clamp(0.0, max) as u16
            }
        })
        .collect();
    Ok(frame.with_samples(samples))
}

/// Re-anchors a shutter table's offsets from one closed-shutter frame, preserving
/// overall brightness: offset_i = S - gain_i * s_i with S the mean corrected level.
pub fn shutter_update_offset(
    table: &CalibrationTable,
    shutter_frame: &RawFrame,
) -> Result<CalibrationTable> {
    if table.mode != CalMode::Shutter {
        return Err(Error::InvalidParam(
            "shutter offset update on a shutterless table".into(),
        ));
    }
    if shutter_frame.width() != table.width || shutter_frame.height() != table.height {
        return Err(Error::DimensionMismatch(format!(
            "shutter frame {}x{} vs table {}x{}",
            shutter_frame.width(),
            shutter_frame.height(),
            table.width,
            table.height
        )));
    }
    let mut s_bar = 0.0;
    let mut n = 0usize;
    for (i, &s) in shutter_frame.samples().iter().enumerate() {
        if !table.bad_pixels.is_bad(i) {
            s_bar += table.gain[i] * s as f64 + table.offset[i];
            n += 1;
        }
    }
    s_bar /= n as f64;
    let offset = shutter_frame
        .samples()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if table.bad_pixels.is_bad(i) {
                0.0
            } else {
                s_bar - table.gain[i] * s as f64
            }
        })
        .collect();
    Ok(CalibrationTable {
        offset,
        ..table.clone()
    })
}

/// Flags defective pixels from cold/hot reference stacks: non-responsive pixels,
/// gain outliers beyond 3 sigma (robust IQR estimate), and stuck pixels that never
/// move while the rest of the array shows temporal noise.
pub fn detect_bad_pixels(cold: &FrameStack, hot: &FrameStack) -> Result<BadPixelMap> {
    check_pair(cold, hot)?;
    let c = temporal_mean(cold);
    let h = temporal_mean(hot);
    let total = c.len();
    let mut flags: Vec<bool> = c
        .iter()
        .zip(&h)
        .map(|(&ci, &hi)| (hi - ci).abs() < RESPONSIVITY_FLOOR)
        .collect();

    // Gain outliers, judged against the median gain of responsive pixels with a
    // robust sigma = IQR / 1.349 (the IQR of a normal distribution is 1.349 sigma).
    let c_bar = mean_over(&c, &flags);
    let h_bar = mean_over(&h, &flags);
    let span = h_bar - c_bar;
    let gains: Vec<f64> = (0..total)
        .filter(|&i| !flags[i])
        .map(|i| span / (h[i] - c[i]))
        .collect();
    if !gains.is_empty() {
        let mut sorted = gains;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = quantile(&sorted, 0.5);
        let sigma = (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 1.349;
        for i in 0..total {
            if !flags[i] && (span / (h[i] - c[i]) - median).abs() > 3.0 * sigma {
                flags[i] = true;
            }
        }
    }

    // Stuck pixels: zero temporal variation in both stacks while the array-wide
    // median variation is positive (otherwise the stream is noise-free by design).
    let sc = temporal_std(cold);
    let sh = temporal_std(hot);
    let spread: Vec<f64> = sc.iter().zip(&sh).map(|(&a, &b)| a.max(b)).collect();
    let mut sorted = spread.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if quantile(&sorted, 0.5) > 0.0 {
        for (flag, &s) in flags.iter_mut().zip(&spread) {
            if s == 0.0 {
                *flag = true;
            }
        }
    }

    let flagged = flags.iter().filter(|&&b| b).count();
    if flagged as f64 / total as f64 >= MAX_BAD_FRACTION {
        return Err(Error::TooManyBadPixels {
            flagged,
            total,
            percent: 100.0 * flagged as f64 / total as f64,
        });
    }
    BadPixelMap::new(cold.width(), cold.height(), flags)
}

/// Linear-interpolated quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

const CAL_MAGIC: &[u8; 4] = b"TCAL";
const CAL_VERSION: u16 = 1;
const CAL_HEADER_LEN: u64 = 31;

/// Writes a table in the .cal layout: 31-byte header, then gain/offset/drift
/// planes as little-endian f64, then the bad-pixel bitmap (LSB-first, rows
/// padded to byte boundaries).
pub fn write_cal_to(mut w: impl Write, table: &CalibrationTable) -> Result<()> {
    w.write_all(CAL_MAGIC)?;
    w.write_u16::<LittleEndian>(CAL_VERSION)?;
    w.write_u8(match table.mode {
        CalMode::Shutter => 0,
        CalMode::Shutterless => 1,
    })?;
    w.write_u16::<LittleEndian>(table.width)?;
    w.write_u16::<LittleEndian>(table.height)?;
    w.write_i32::<LittleEndian>((table.t_amb_ref_c * 1000.0).round() as i32)?;
    w.write_f64::<LittleEndian>(table.target_cold)?;
    w.write_f64::<LittleEndian>(table.target_hot)?;
    for plane in [&table.gain, &table.offset, &table.drift_slope] {
        for &v in plane.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    let flags = table.bad_pixels.flags();
    let row_bytes = (table.width as usize + 7) / 8;
    for y in 0..table.height as usize {
        let mut row = vec![0u8; row_bytes];
        for x in 0..table.width as usize {
            if flags[y * table.width as usize + x] {
                row[x / 8] |= 1 << (x % 8);
            }
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Parses and validates a .cal table.
pub fn read_cal_from(mut r: impl Read) -> Result<CalibrationTable> {
    let truncated = |context: &str, expected: u64| {
        let context = context.to_string();
        move |_| Error::TruncatedPayload {
            context: context.clone(),
            expected,
        }
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(truncated("table header", CAL_HEADER_LEN))?;
    if &magic != CAL_MAGIC {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:02x?}, expected \"TCAL\"",
            magic
        )));
    }
    let version = r
        .read_u16::<LittleEndian>()
        .map_err(truncated("table header", CAL_HEADER_LEN))?;
    if version != CAL_VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported table version {version}"
        )));
    }
    let mode = match r
        .read_u8()
        .map_err(truncated("table header", CAL_HEADER_LEN))?
    {
        0 => CalMode::Shutter,
        1 => CalMode::Shutterless,
        m => return Err(Error::MalformedHeader(format!("unknown mode byte {m}"))),
    };
    let header_err = truncated("table header", CAL_HEADER_LEN);
    let width = r.read_u16::<LittleEndian>().map_err(&header_err)?;
    let height = r.read_u16::<LittleEndian>().map_err(&header_err)?;
    if width < 16 || height < 16 {
        return Err(Error::MalformedHeader(format!(
            "table dimensions {width}x{height} below minimum 16"
        )));
    }
    let t_amb_ref_c = r.read_i32::<LittleEndian>().map_err(&header_err)? as f64 / 1000.0;
    let target_cold = r.read_f64::<LittleEndian>().map_err(&header_err)?;
    let target_hot = r.read_f64::<LittleEndian>().map_err(&header_err)?;

    let pixels = width as usize * height as usize;
    let mut planes = [Vec::new(), Vec::new(), Vec::new()];
    for (p, name) in planes.iter_mut().zip(["gain", "offset", "drift"]) {
        let mut plane = vec![0.0f64; pixels];
        r.read_f64_into::<LittleEndian>(&mut plane)
            .map_err(truncated(&format!("{name} plane"), 8 * pixels as u64))?;
        *p = plane;
    }
    let [gain, offset, drift_slope] = planes;

    let row_bytes = (width as usize + 7) / 8;
    let mut flags = vec![false; pixels];
    for y in 0..height as usize {
        let mut row = vec![0u8; row_bytes];
        r.read_exact(&mut row)
            .map_err(truncated("bad-pixel bitmap", (row_bytes * height as usize) as u64))?;
        for x in 0..width as usize {
            flags[y * width as usize + x] = row[x / 8] >> (x % 8) & 1 == 1;
        }
    }

    for i in 0..pixels {
        if flags[i] {
            if gain[i] != 1.0 || offset[i] != 0.0 || drift_slope[i] != 0.0 {
                return Err(Error::MalformedHeader(format!(
                    "bad pixel {i} not neutralized (gain {}, offset {}, drift {})",
                    gain[i], offset[i], drift_slope[i]
                )));
            }
        } else {
            if !gain[i].is_finite() || gain[i] < GAIN_RANGE.0 || gain[i] > GAIN_RANGE.1 {
                return Err(Error::MalformedHeader(format!(
                    "gain {} at pixel {i} outside [0.1, 10]",
                    gain[i]
                )));
            }
            if !offset[i].is_finite() || !drift_slope[i].is_finite() {
                return Err(Error::MalformedHeader(format!(
                    "non-finite offset/drift at pixel {i}"
                )));
            }
            if mode == CalMode::Shutter && drift_slope[i] != 0.0 {
                return Err(Error::MalformedHeader(format!(
                    "shutter-mode table carries drift {} at pixel {i}",
                    drift_slope[i]
                )));
            }
        }
    }
    Ok(CalibrationTable {
        mode,
        width,
        height,
        gain,
        offset,
        drift_slope,
        t_amb_ref_c,
        target_cold,
        target_hot,
        bad_pixels: BadPixelMap::new(width, height, flags)?,
    })
}

pub fn write_cal(path: impl AsRef<Path>, table: &CalibrationTable) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_cal_to(&mut w, table)?;
    w.flush()?;
    Ok(())
}

pub fn read_cal(path: impl AsRef<Path>) -> Result<CalibrationTable> {
    read_cal_from(BufReader::new(File::open(path)?))
}
