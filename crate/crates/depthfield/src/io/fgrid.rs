//! FGRID: the crate's binary float-grid interchange format.
//!
//! Layout: the 5 magic bytes `FGRD1`, width and height as unsigned 32-bit
//! little-endian, then width·height IEEE-754 binary32 values little-endian in
//! row-major order. A 1x1 grid is exactly 5 + 8 + 4 = 17 bytes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ScalarGrid;

pub const FGRID_MAGIC: &[u8; 5] = b"FGRD1";

/// Refuse absurd allocations before touching the payload.
const MAX_ELEMENTS: u64 = 1 << 28;

pub fn fgrid_bytes(grid: &ScalarGrid) -> Vec<u8> {
    let (w, h) = grid.dims();
    let mut out = Vec::with_capacity(5 + 8 + 4 * w * h);
    out.extend_from_slice(FGRID_MAGIC);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    for &v in grid.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn parse_fgrid(bytes: &[u8]) -> Result<ScalarGrid> {
    if bytes.len() < 13 {
        return Err(Error::Format(format!(
            "fgrid header needs 13 bytes, got {}",
            bytes.len()
        )));
    }
    if &bytes[..5] != FGRID_MAGIC {
        return Err(Error::Format("bad fgrid magic".into()));
    }
    let w = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as u64;
    let h = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as u64;
    let elements = w.checked_mul(h).ok_or_else(|| Error::Format("dimension overflow".into()))?;
    if elements > MAX_ELEMENTS {
        return Err(Error::Format(format!(
            "grid of {w}x{h} elements exceeds the size cap"
        )));
    }
    let expected = 13 + elements * 4;
    if bytes.len() as u64 != expected {
        return Err(Error::Format(format!(
            "fgrid payload for {w}x{h} needs {expected} bytes total, got {}",
            bytes.len()
        )));
    }
    let mut values = Vec::with_capacity(elements as usize);
    for chunk in bytes[13..].chunks_exact(4) {
        values.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
    }
    ScalarGrid::from_vec(w as usize, h as usize, values)
}

pub fn write_fgrid(path: &Path, grid: &ScalarGrid) -> Result<()> {
    std::fs::write(path, fgrid_bytes(grid)).map_err(|e| Error::io_at(path, e))
}

pub fn read_fgrid(path: &Path) -> Result<ScalarGrid> {
    let bytes = std::fs::read(path).map_err(|e| Error::io_at(path, e))?;
    parse_fgrid(&bytes)
}
