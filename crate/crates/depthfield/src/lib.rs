//! Dense depth-field estimation from a monocular image sequence with known
//! camera motion.
//!
//! The scene is assumed static and Lambertian, so received brightness is a
//! transported scalar on the view sphere and its transport velocity splits
//! into a known rotational part plus the translational part scaled by the
//! unknown inverse depth. Three estimators are built on that structure:
//!
//! * [`flow`] — classical Horn-Schunck optical flow, the measured input of
//!   the first observer;
//! * [`vardepth`] — a rotation-invariant variational estimator solving a
//!   per-frame diffusion equation directly for inverse depth;
//! * [`observer`] — two asymptotic observers integrating the depth transport
//!   PDE with an innovation term, filtering either the flow or the
//!   variational estimate over time.
//!
//! [`scene`] renders the synthetic benchmark (a tilted textured plane under
//! sinusoidal camera translation), [`metrics`] scores estimates against
//! ground truth, [`io`] holds the interchange formats and [`pipeline`] wires
//! everything into the CLI commands.

pub mod config;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod observer;
pub mod pipeline;
pub mod scene;
pub mod vardepth;

pub use error::{Error, Result};
pub use grid::{BrightnessField, DepthField, GammaField, ScalarGrid};
