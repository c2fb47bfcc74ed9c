//! Container and PGM serialization for frame stacks.
//!
//! The native container is a flat little-endian layout: a 32-byte file header
//! (magic `TIRS`, version, dimensions, bit depth, frame count, reserved pad)
//! followed by one 16-byte frame header (index, FPA temperature in milli-degrees C,
//! reserved pad) plus `width * height` u16 samples per frame.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::frame::{max_sample, FrameStack, RawFrame};

const MAGIC: &[u8; 4] = b"TIRS";
const VERSION: u16 = 1;
const FILE_HEADER_LEN: u64 = 32;
const FRAME_HEADER_LEN: u64 = 16;

/// Serializes a stack into the container layout.
pub fn write_container_to(mut w: impl Write, stack: &FrameStack) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u16::<LittleEndian>(stack.width())?;
    w.write_u16::<LittleEndian>(stack.height())?;
    w.write_u16::<LittleEndian>(stack.bit_depth())?;
    w.write_u32::<LittleEndian>(stack.len() as u32)?;
    w.write_all(&[0u8; 16])?;
    for (i, frame) in stack.frames().iter().enumerate() {
        w.write_u32::<LittleEndian>(i as u32)?;
        w.write_i32::<LittleEndian>((frame.fpa_temp_c() * 1000.0).round() as i32)?;
        w.write_all(&[0u8; 8])?;
        for &s in frame.samples() {
            w.write_u16::<LittleEndian>(s)?;
        }
    }
    Ok(())
}

/// Parses a container, validating magic, version, depth, and payload length.
pub fn read_container_from(mut r: impl Read, source_tag: impl Into<String>) -> Result<FrameStack> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::TruncatedPayload {
        context: "file header".into(),
        expected: FILE_HEADER_LEN,
    })?;
    if &magic != MAGIC {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:02x?}, expected \"TIRS\"",
            magic
        )));
    }
    let header_err = |_| Error::TruncatedPayload {
        context: "file header".into(),
        expected: FILE_HEADER_LEN,
    };
    let version = r.read_u16::<LittleEndian>().map_err(header_err)?;
    if version != VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported container version {version}"
        )));
    }
    let width = r.read_u16::<LittleEndian>().map_err(header_err)?;
    let height = r.read_u16::<LittleEndian>().map_err(header_err)?;
    let bit_depth = r.read_u16::<LittleEndian>().map_err(header_err)?;
    if !(8..=16).contains(&bit_depth) {
        return Err(Error::MalformedHeader(format!(
            "bit depth {bit_depth} outside 8..=16"
        )));
    }
    let frame_count = r.read_u32::<LittleEndian>().map_err(header_err)?;
    let mut reserved = [0u8; 16];
    r.read_exact(&mut reserved).map_err(header_err)?;

    if frame_count == 0 {
        return Err(Error::EmptyStack);
    }
    let pixels = width as usize * height as usize;
    let frame_bytes = FRAME_HEADER_LEN + 2 * pixels as u64;
    let mut frames = Vec::with_capacity(frame_count as usize);
    for i in 0..frame_count {
        let frame_err = move |_| Error::TruncatedPayload {
            context: format!("frame {i}"),
            expected: frame_bytes,
        };
        let _index = r.read_u32::<LittleEndian>().map_err(frame_err)?;
        let milli_c = r.read_i32::<LittleEndian>().map_err(frame_err)?;
        let mut pad = [0u8; 8];
        r.read_exact(&mut pad).map_err(frame_err)?;
        let mut samples = vec![0u16; pixels];
        r.read_u16_into::<LittleEndian>(&mut samples)
            .map_err(frame_err)?;
        frames.push(RawFrame::new(
            width,
            height,
            bit_depth,
            milli_c as f64 / 1000.0,
            samples,
        )?);
    }
    FrameStack::new(frames, source_tag)
}

/// Writes a stack to a container file.
pub fn write_container(path: impl AsRef<Path>, stack: &FrameStack) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_container_to(&mut w, stack)?;
    w.flush()?;
    Ok(())
}

/// Reads a container file; the stack's source tag is the path.
pub fn read_container(path: impl AsRef<Path>) -> Result<FrameStack> {
    let path = path.as_ref();
    let r = BufReader::new(File::open(path)?);
    read_container_from(r, path.display().to_string())
}

/// Writes one frame as binary PGM (P5). Depths above 8 bits use the two-byte
/// big-endian sample encoding the format prescribes for maxval > 255.
pub fn write_pgm_to(mut w: impl Write, frame: &RawFrame) -> Result<()> {
    let maxval = max_sample(frame.bit_depth());
    write!(w, "P5\n{} {}\n{}\n", frame.width(), frame.height(), maxval)?;
    if maxval > 255 {
        for &s in frame.samples() {
            w.write_u16::<BigEndian>(s)?;
        }
    } else {
        for &s in frame.samples() {
            w.write_u8(s as u8)?;
        }
    }
    Ok(())
}

/// Writes an 8-bit PGM; the frame must already be at bit depth 8.
pub fn write_pgm8_to(w: impl Write, frame: &RawFrame) -> Result<()> {
    if frame.bit_depth() != 8 {
        return Err(Error::DepthMismatch(format!(
            "8-bit PGM export needs a depth-8 frame, got {}",
            frame.bit_depth()
        )));
    }
    write_pgm_to(w, frame)
}

pub fn write_pgm(path: impl AsRef<Path>, frame: &RawFrame) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm_to(&mut w, frame)?;
    w.flush()?;
    Ok(())
}

/// Writes each frame of a stack as `{stem}_{index:04}.pgm` beside the stem path.
pub fn write_pgm_stack(stem: impl AsRef<Path>, stack: &FrameStack) -> Result<()> {
    let stem = stem.as_ref();
    for (i, frame) in stack.frames().iter().enumerate() {
        let name = match stem.file_name() {
            Some(n) => format!("{}_{i:04}.pgm", n.to_string_lossy()),
            None => format!("{i:04}.pgm"),
        };
        write_pgm(stem.with_file_name(name), frame)?;
    }
    Ok(())
}

/// Reads one token (run of non-whitespace) from a PGM header, skipping `#` comments.
fn pgm_token(r: &mut impl Read) -> Result<String> {
    let mut tok = String::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        if r.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(Error::MalformedHeader("PGM header ended early".into()));
            }
            return Ok(tok);
        }
        let c = byte[0] as char;
        if in_comment {
            in_comment = c != '\n';
        } else if c == '#' {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !tok.is_empty() {
                return Ok(tok);
            }
        } else {
            tok.push(c);
        }
    }
}

/// Parses a binary PGM into a raw frame at 25 C; bit depth is the smallest depth
/// (at least 8) that covers the declared maxval.
pub fn read_pgm_from(mut r: impl Read) -> Result<RawFrame> {
    if pgm_token(&mut r)? != "P5" {
        return Err(Error::MalformedHeader("not a binary PGM (P5)".into()));
    }
    let parse = |tok: String, what: &str| -> Result<u32> {
        tok.parse::<u32>()
            .map_err(|_| Error::MalformedHeader(format!("bad PGM {what}: {tok:?}")))
    };
    let width = parse(pgm_token(&mut r)?, "width")?;
    let height = parse(pgm_token(&mut r)?, "height")?;
    let maxval = parse(pgm_token(&mut r)?, "maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::MalformedHeader(format!("PGM maxval {maxval}")));
    }
    if width > u16::MAX as u32 || height > u16::MAX as u32 {
        return Err(Error::MalformedHeader(format!("PGM size {width}x{height}")));
    }
    let bit_depth = (16 - (maxval as u16).leading_zeros() as u16).max(8);
    let pixels = (width * height) as usize;
    let mut samples = vec![0u16; pixels];
    let payload = if maxval > 255 { 2 * pixels } else { pixels } as u64;
    if maxval > 255 {
        r.read_u16_into::<BigEndian>(&mut samples)
    } else {
        let mut bytes = vec![0u8; pixels];
        r.read_exact(&mut bytes).map(|_| {
            for (dst, src) in samples.iter_mut().zip(&bytes) {
                *dst = *src as u16;
            }
        })
    }
    .map_err(|_| Error::TruncatedPayload {
        context: "PGM payload".into(),
        expected: payload,
    })?;
    RawFrame::new(width as u16, height as u16, bit_depth, 25.0, samples)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<RawFrame> {
    read_pgm_from(BufReader::new(File::open(path)?))
}
