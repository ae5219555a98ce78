//! Binary PGM (P5) images, 8- or 16-bit. Frames are written 16-bit with a
//! scale factor (sample = round(value·scale)) so sub-integer noise survives
//! the trip through the file.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ScalarGrid;

const MAX_PIXELS: u64 = 1 << 28;

/// Raw samples of a parsed PGM plus its declared maxval.
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub samples: ScalarGrid,
    pub maxval: u32,
}

impl PgmImage {
    /// Samples divided by a scale factor, undoing `pgm_bytes(scale)`.
    pub fn unscaled(&self, scale: f64) -> ScalarGrid {
        self.samples.map(|v| v / scale)
    }
}

/// Encodes a field as 16-bit binary PGM after multiplying by `scale`.
/// Values that land outside [0, 65535] are an error.
pub fn pgm_bytes(field: &ScalarGrid, scale: f64) -> Result<Vec<u8>> {
    let (w, h) = field.dims();
    let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
    out.reserve(2 * w * h);
    for &v in field.values() {
        let s = (v * scale).round();
        if !(0.0..=65535.0).contains(&s) {
            return Err(Error::Format(format!(
                "sample {v} scaled by {scale} leaves the 16-bit range"
            )));
        }
        out.extend_from_slice(&(s as u16).to_be_bytes());
    }
    Ok(out)
}

fn is_pgm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

/// Reads one ASCII unsigned integer, skipping whitespace and `#` comments.
fn read_token(bytes: &[u8], mut pos: usize) -> Result<(u32, usize)> {
    loop {
        while pos < bytes.len() && is_pgm_space(bytes[pos]) {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    let start = pos;
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        pos += 1;
    }
    if pos == start {
        return Err(Error::Format("expected an ASCII integer in the pgm header".into()));
    }
    let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
    let value: u64 = text
        .parse()
        .map_err(|_| Error::Format(format!("integer {text} out of range")))?;
    if value > u32::MAX as u64 {
        return Err(Error::Format(format!("integer {value} out of range")));
    }
    Ok((value as u32, pos))
}

/// Parses binary PGM bytes. Accepts 8-bit (maxval < 256) and 16-bit
/// (big-endian) sample data; requires the payload length to match exactly.
pub fn parse_pgm(bytes: &[u8]) -> Result<PgmImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("not a binary pgm (P5) file".into()));
    }
    let (w, pos) = read_token(bytes, 2)?;
    let (h, pos) = read_token(bytes, pos)?;
    let (maxval, pos) = read_token(bytes, pos)?;
    if w == 0 || h == 0 {
        return Err(Error::Format("zero pgm dimensions".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} outside [1, 65535]")));
    }
    let pixels = w as u64 * h as u64;
    if pixels > MAX_PIXELS {
        return Err(Error::Format(format!("{w}x{h} exceeds the pixel cap")));
    }
    if pos >= bytes.len() || !is_pgm_space(bytes[pos]) {
        return Err(Error::Format("missing whitespace after the pgm header".into()));
    }
    let data = &bytes[pos + 1..];
    let two_byte = maxval > 255;
    let expected = pixels * if two_byte { 2 } else { 1 };
    if data.len() as u64 != expected {
        return Err(Error::Format(format!(
            "pgm payload needs {expected} bytes, got {}",
            data.len()
        )));
    }
    let mut values = Vec::with_capacity(pixels as usize);
    if two_byte {
        for chunk in data.chunks_exact(2) {
            values.push(u16::from_be_bytes([chunk[0], chunk[1]]) as f64);
        }
    } else {
        values.extend(data.iter().map(|&b| b as f64));
    }
    Ok(PgmImage {
        samples: ScalarGrid::from_vec(w as usize, h as usize, values)?,
        maxval,
    })
}

pub fn write_pgm(path: &Path, field: &ScalarGrid, scale: f64) -> Result<()> {
    std::fs::write(path, pgm_bytes(field, scale)?).map_err(|e| Error::io_at(path, e))
}

pub fn read_pgm(path: &Path) -> Result<PgmImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io_at(path, e))?;
    parse_pgm(&bytes)
}
