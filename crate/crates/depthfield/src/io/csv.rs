//! Motion log CSV: header `t,v1,v2,v3,w1,w2,w3`, one row per frame.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::MotionSample;
use crate::metrics::fmt_float;

pub const MOTION_HEADER: &str = "t,v1,v2,v3,w1,w2,w3";

pub fn motion_csv_string(motions: &[MotionSample]) -> Result<String> {
    if motions.is_empty() {
        return Err(Error::Invalid("no motion samples to export".into()));
    }
    let mut out = String::from(MOTION_HEADER);
    out.push('\n');
    for m in motions {
        let row = [m.t, m.v.x, m.v.y, m.v.z, m.omega.x, m.omega.y, m.omega.z];
        let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_motion_csv(text: &str) -> Result<Vec<MotionSample>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == MOTION_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Config {
                line: 1,
                message: format!("expected header `{MOTION_HEADER}`, got `{header}`"),
            })
        }
        None => {
            return Err(Error::Config {
                line: 1,
                message: "empty motion log".into(),
            })
        }
    }
    let mut motions = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(Error::Config {
                line: idx + 1,
                message: format!("expected 7 columns, got {}", cells.len()),
            });
        }
        let mut vals = [0.0f64; 7];
        for (c, (cell, slot)) in cells.iter().zip(vals.iter_mut()).enumerate() {
            *slot = cell.trim().parse().map_err(|_| Error::Config {
                line: idx + 1,
                message: format!("column {} is not a number: `{cell}`", c + 1),
            })?;
            if !slot.is_finite() {
                return Err(Error::Config {
                    line: idx + 1,
                    message: format!("column {} is not finite", c + 1),
                });
            }
        }
        motions.push(MotionSample::new(
            Vector3::new(vals[1], vals[2], vals[3]),
            Vector3::new(vals[4], vals[5], vals[6]),
            vals[0],
        ));
    }
    if motions.is_empty() {
        return Err(Error::Config {
            line: 1,
            message: "motion log has no rows".into(),
        });
    }
    Ok(motions)
}

pub fn write_motion_csv(path: &Path, motions: &[MotionSample]) -> Result<()> {
    std::fs::write(path, motion_csv_string(motions)?).map_err(|e| Error::io_at(path, e))
}

pub fn read_motion_csv(path: &Path) -> Result<Vec<MotionSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    parse_motion_csv(&text)
}
