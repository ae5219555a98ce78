//! Depth-error metrics and curve export.
//!
//! The headline number is the global relative error
//!
//!   E = ∫ |D̂−D|/D dσ / ∫ dσ
//!
//! integrated over the view sphere, so off-axis pixels are discounted by the
//! solid-angle weight. Lᵖ norms use the same quadrature; L∞ is the plain max
//! over valid pixels.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{solid_angle_weight, PixelGrid};
use crate::grid::{BrightnessField, DepthField};

/// Per-frame error summary of an observer run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub frame_index: usize,
    pub t: f64,
    pub global_error: f64,
    pub linf_error: f64,
    pub l1_error: f64,
    pub l2_error: f64,
    pub clamp_count: usize,
}

fn check_fields(dhat: &DepthField, truth: &DepthField, grid: &PixelGrid) -> Result<()> {
    dhat.values.check_same_dims(&truth.values)?;
    if dhat.values.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: dhat.values.dims(),
        });
    }
    Ok(())
}

/// Solid-angle-weighted mean relative depth error. Pixels where `mask` is
/// false are excluded from numerator and denominator.
pub fn global_error_masked(
    dhat: &DepthField,
    truth: &DepthField,
    grid: &PixelGrid,
    mask: Option<&[bool]>,
) -> Result<f64> {
    check_fields(dhat, truth, grid)?;
    let (w, h) = grid.dims();
    if let Some(m) = mask {
        if m.len() != w * h {
            return Err(Error::Invalid("mask length mismatch".into()));
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..h {
        for i in 0..w {
            if let Some(m) = mask {
                if !m[j * w + i] {
                    continue;
                }
            }
            let d = truth.values.at(i, j);
            if !(d > 0.0) {
                return Err(Error::Invalid(format!(
                    "nonpositive truth depth {d} at pixel ({i}, {j})"
                )));
            }
            let (z1, z2) = grid.z(i, j);
            let sw = solid_angle_weight(z1, z2);
            num += sw * (dhat.values.at(i, j) - d).abs() / d;
            den += sw;
        }
    }
    if den == 0.0 {
        return Err(Error::Invalid("no valid pixels".into()));
    }
    Ok(num / den)
}

pub fn global_error(dhat: &DepthField, truth: &DepthField, grid: &PixelGrid) -> Result<f64> {
    global_error_masked(dhat, truth, grid, None)
}

/// (∫ |D̂−D|ᵖ dσ)^(1/p) with the solid-angle quadrature.
pub fn lp_error(dhat: &DepthField, truth: &DepthField, grid: &PixelGrid, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Invalid("p must be positive".into()));
    }
    check_fields(dhat, truth, grid)?;
    let (w, h) = grid.dims();
    let mu = grid.dz1() * grid.dz2();
    let mut acc = 0.0;
    for j in 0..h {
        for i in 0..w {
            let (z1, z2) = grid.z(i, j);
            let sw = solid_angle_weight(z1, z2);
            acc += sw * (dhat.values.at(i, j) - truth.values.at(i, j)).abs().powf(p) * mu;
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// Max absolute depth error over the grid.
pub fn linf_error(dhat: &DepthField, truth: &DepthField) -> Result<f64> {
    dhat.values.check_same_dims(&truth.values)?;
    Ok(dhat
        .values
        .values()
        .iter()
        .zip(truth.values.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Bundles the standard per-frame metrics.
pub fn error_report(
    frame_index: usize,
    t: f64,
    dhat: &DepthField,
    truth: &DepthField,
    grid: &PixelGrid,
    clamp_count: usize,
) -> Result<ErrorReport> {
    Ok(ErrorReport {
        frame_index,
        t,
        global_error: global_error(dhat, truth, grid)?,
        linf_error: linf_error(dhat, truth)?,
        l1_error: lp_error(dhat, truth, grid, 1.0)?,
        l2_error: lp_error(dhat, truth, grid, 2.0)?,
        clamp_count,
    })
}

/// Divides a frame by its mean intensity. Compensates global illumination
/// changes before differentiation.
pub fn normalize_intensity(frame: &BrightnessField) -> Result<BrightnessField> {
    if frame.values().is_empty() {
        return Err(Error::Invalid("empty frame".into()));
    }
    let mean = frame.mean();
    if !(mean > 0.0) && mean.is_finite() {
        return Err(Error::Invalid(format!("frame mean {mean} must be positive")));
    }
    if !mean.is_finite() {
        return Err(Error::Invalid("frame mean is not finite".into()));
    }
    Ok(frame.map(|v| v / mean))
}

/// Fixed 9-significant-digit float formatting shared by every CSV writer, so
/// re-exports are byte-identical.
pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Writes the error curve: header `frame,t,global_error,linf,l1,l2,clamps`,
/// one row per report.
pub fn write_curve_csv(path: &Path, reports: &[ErrorReport]) -> Result<()> {
    let text = curve_csv_string(reports)?;
    std::fs::write(path, text).map_err(|e| Error::io_at(path, e))
}

pub fn curve_csv_string(reports: &[ErrorReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Invalid("no reports to export".into()));
    }
    let mut out = String::from("frame,t,global_error,linf,l1,l2,clamps\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.frame_index,
            fmt_float(r.t),
            fmt_float(r.global_error),
            fmt_float(r.linf_error),
            fmt_float(r.l1_error),
            fmt_float(r.l2_error),
            r.clamp_count,
        ));
    }
    Ok(out)
}

/// Writes a generic CSV table with the shared float formatting.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io_at(path, e))
}
