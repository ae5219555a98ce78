//! Serialized field and log formats.
//!
//! Everything here parses untrusted bytes: reads validate structure and sizes
//! up front and never panic on malformed input.

mod csv;
mod fgrid;
mod pgm;

pub use csv::{motion_csv_string, parse_motion_csv, read_motion_csv, write_motion_csv};
pub use fgrid::{fgrid_bytes, parse_fgrid, read_fgrid, write_fgrid, FGRID_MAGIC};
pub use pgm::{parse_pgm, pgm_bytes, read_pgm, write_pgm, PgmImage};
