//! Dense Horn-Schunck optical flow.
//!
//! The flow (V₁, V₂) minimizes a quadratic cost balancing the brightness
//! transport residual against smoothness. Each Jacobi sweep replaces the flow
//! by the neighbor-weighted mean corrected along the brightness gradient,
//!
//!   V ← V̄ − ∇y·(∇y·V̄ + y_t) / (α² + |∇y|²),
//!
//! which solves the per-pixel stationarity system exactly with the neighbors
//! frozen. Flow components are expressed in pinhole units per second; the
//! pixel-to-pinhole scale enters once, in the derivative filters.

use crate::error::{Error, Result};
use crate::geometry::PixelGrid;
use crate::grid::{BrightnessField, ScalarGrid};

/// Dense apparent-velocity field in pinhole units per second.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub v1: ScalarGrid,
    pub v2: ScalarGrid,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            v1: ScalarGrid::zeros(width, height),
            v2: ScalarGrid::zeros(width, height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.v1.dims()
    }
}

/// Brightness derivatives feeding the flow and depth estimators:
/// ∂y/∂z₁, ∂y/∂z₂ (intensity per pinhole unit) and ∂y/∂t (intensity per
/// second).
#[derive(Debug, Clone)]
pub struct DerivativeStack {
    pub yz1: ScalarGrid,
    pub yz2: ScalarGrid,
    pub yt: ScalarGrid,
}

impl DerivativeStack {
    pub fn dims(&self) -> (usize, usize) {
        self.yz1.dims()
    }
}

/// Horn-Schunck solver parameters.
#[derive(Debug, Clone)]
pub struct HsConfig {
    /// Regularization weight, intensity units.
    pub alpha: f64,
    /// Maximum Jacobi sweeps per frame pair.
    pub iterations: usize,
    /// Warm start; `None` starts from zero flow.
    pub init: Option<FlowField>,
}

impl HsConfig {
    pub fn new(alpha: f64, iterations: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Invalid("alpha must be positive".into()));
        }
        if iterations == 0 {
            return Err(Error::Invalid("need at least one iteration".into()));
        }
        Ok(HsConfig {
            alpha,
            iterations,
            init: None,
        })
    }
}

/// Early-exit threshold on the max per-pixel update of a sweep.
pub const HS_EARLY_EXIT: f64 = 1e-6;

/// Stencil weights of the 8-neighbor weighted mean: 1/6 on the axis
/// neighbors, 1/12 on the diagonals. Out-of-grid neighbors replicate the
/// nearest pixel, which keeps the implied smoothness matrix symmetric and
/// the mean an average (Neumann boundary).
const NEIGHBOR_OFFSETS: [(isize, isize, f64); 8] = [
    (1, 0, 1.0 / 6.0),
    (-1, 0, 1.0 / 6.0),
    (0, 1, 1.0 / 6.0),
    (0, -1, 1.0 / 6.0),
    (1, 1, 1.0 / 12.0),
    (1, -1, 1.0 / 12.0),
    (-1, 1, 1.0 / 12.0),
    (-1, -1, 1.0 / 12.0),
];

#[inline]
pub(crate) fn neighbor_mean(src: &ScalarGrid, i: usize, j: usize) -> f64 {
    let (ii, jj) = (i as isize, j as isize);
    let mut acc = 0.0;
    for (di, dj, w) in NEIGHBOR_OFFSETS {
        acc += w * src.at_clamped(ii + di, jj + dj);
    }
    acc
}

/// Smoothness energy matching `neighbor_mean`: half the weighted sum of
/// squared differences against the clamped 8-neighborhood.
pub(crate) fn smoothness_energy(field: &ScalarGrid) -> f64 {
    let (w, h) = field.dims();
    let mut acc = 0.0;
    for j in 0..h {
        for i in 0..w {
            let center = field.at(i, j);
            for (di, dj, wt) in NEIGHBOR_OFFSETS {
                let n = field.at_clamped(i as isize + di, j as isize + dj);
                acc += 0.5 * wt * (n - center) * (n - center);
            }
        }
    }
    acc
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];

/// One 3x3 box-filter pass with edge replication.
pub fn box_smooth(src: &ScalarGrid) -> ScalarGrid {
    let (w, h) = src.dims();
    let mut out = ScalarGrid::zeros(w, h);
    out.fill_rows(|j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dj in -1..=1 {
                for di in -1..=1 {
                    acc += src.at_clamped(i as isize + di, j as isize + dj);
                }
            }
            *v = acc / 9.0;
        }
    });
    out
}

/// Sobel and temporal derivatives of a frame pair.
///
/// Both frames are first smoothed by `presmooth` passes of a 3x3 box filter
/// (a common prefilter suppressing pixel noise before differentiation; 0
/// leaves the frames untouched). Spatial derivatives are then taken on the
/// average of the two frames with 3x3 Sobel kernels (normalized by the
/// kernel gain of 8 and the pinhole step); the temporal derivative is the
/// forward difference smoothed by one more 3x3 box pass. Borders replicate
/// the nearest edge pixel.
pub fn spatial_derivatives(
    frame_a: &BrightnessField,
    frame_b: &BrightnessField,
    grid: &PixelGrid,
    dt: f64,
    presmooth: usize,
) -> Result<DerivativeStack> {
    frame_a.check_same_dims(frame_b)?;
    if frame_a.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: frame_a.dims(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    let mut fa = frame_a.clone();
    let mut fb = frame_b.clone();
    for _ in 0..presmooth {
        fa = box_smooth(&fa);
        fb = box_smooth(&fb);
    }
    let (w, h) = fa.dims();
    let mut avg = ScalarGrid::zeros(w, h);
    let mut diff = ScalarGrid::zeros(w, h);
    for idx in 0..w * h {
        let a = fa.values()[idx];
        let b = fb.values()[idx];
        avg.values_mut()[idx] = 0.5 * (a + b);
        diff.values_mut()[idx] = (b - a) / dt;
    }

    let inv_step1 = 1.0 / (8.0 * grid.dz1());
    let inv_step2 = 1.0 / (8.0 * grid.dz2());

    let mut yz1 = ScalarGrid::zeros(w, h);
    yz1.fill_rows(|j, row| {
        for (i, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (dj, krow) in SOBEL_X.iter().enumerate() {
                for (di, k) in krow.iter().enumerate() {
                    acc += k
                        * avg.at_clamped(i as isize + di as isize - 1, j as isize + dj as isize - 1);
                }
            }
            *out = acc * inv_step1;
        }
    });
    let mut yz2 = ScalarGrid::zeros(w, h);
    yz2.fill_rows(|j, row| {
        for (i, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dj in 0..3 {
                for di in 0..3 {
                    // transposed kernel
                    acc += SOBEL_X[di][dj]
                        * avg.at_clamped(i as isize + di as isize - 1, j as isize + dj as isize - 1);
                }
            }
            *out = acc * inv_step2;
        }
    });
    let mut yt = ScalarGrid::zeros(w, h);
    yt.fill_rows(|j, row| {
        for (i, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dj in -1..=1 {
                for di in -1..=1 {
                    acc += diff.at_clamped(i as isize + di, j as isize + dj);
                }
            }
            *out = acc / 9.0;
        }
    });
    Ok(DerivativeStack { yz1, yz2, yt })
}

/// Runs the Jacobi iteration on the Horn-Schunck stationarity system.
pub fn horn_schunck(stack: &DerivativeStack, cfg: &HsConfig) -> Result<FlowField> {
    if !(cfg.alpha > 0.0) {
        return Err(Error::Invalid("alpha must be positive".into()));
    }
    let (w, h) = stack.dims();
    let mut flow = match &cfg.init {
        Some(f) => {
            f.v1.check_same_dims(&stack.yz1)?;
            f.clone()
        }
        None => FlowField::zeros(w, h),
    };
    let alpha2 = cfg.alpha * cfg.alpha;

    let mut next = FlowField::zeros(w, h);
    for _ in 0..cfg.iterations {
        let max_update = hs_sweep(stack, alpha2, &flow, &mut next);
        std::mem::swap(&mut flow, &mut next);
        if max_update < HS_EARLY_EXIT {
            break;
        }
    }
    Ok(flow)
}

/// One double-buffered sweep; returns the max per-pixel update.
fn hs_sweep(stack: &DerivativeStack, alpha2: f64, prev: &FlowField, next: &mut FlowField) -> f64 {
    use rayon::prelude::*;
    let (w, _) = stack.dims();
    let row_max: Vec<f64> = next
        .v1
        .values_mut()
        .par_chunks_mut(w)
        .zip(next.v2.values_mut().par_chunks_mut(w))
        .enumerate()
        .map(|(j, (row1, row2))| {
            let mut local_max = 0.0_f64;
            for i in 0..w {
                let m1 = neighbor_mean(&prev.v1, i, j);
                let m2 = neighbor_mean(&prev.v2, i, j);
                let yz1 = stack.yz1.at(i, j);
                let yz2 = stack.yz2.at(i, j);
                let yt = stack.yt.at(i, j);
                let p = (yz1 * m1 + yz2 * m2 + yt) / (alpha2 + yz1 * yz1 + yz2 * yz2);
                let v1 = m1 - yz1 * p;
                let v2 = m2 - yz2 * p;
                local_max = local_max
                    .max((v1 - prev.v1.at(i, j)).abs())
                    .max((v2 - prev.v2.at(i, j)).abs());
                row1[i] = v1;
                row2[i] = v2;
            }
            local_max
        })
        .collect();
    row_max.into_iter().fold(0.0, f64::max)
}

/// Discrete Horn-Schunck cost of a candidate flow: transport residual squared
/// plus α² times the stencil smoothness energy, integrated over the image
/// rectangle with the Euclidean measure.
pub fn hs_cost(flow: &FlowField, stack: &DerivativeStack, grid: &PixelGrid, alpha: f64) -> Result<f64> {
    flow.v1.check_same_dims(&stack.yz1)?;
    let (w, h) = stack.dims();
    let mut data = 0.0;
    for j in 0..h {
        for i in 0..w {
            let r = stack.yt.at(i, j)
                + flow.v1.at(i, j) * stack.yz1.at(i, j)
                + flow.v2.at(i, j) * stack.yz2.at(i, j);
            data += r * r;
        }
    }
    let smooth = smoothness_energy(&flow.v1) + smoothness_energy(&flow.v2);
    Ok((data + alpha * alpha * smooth) * grid.dz1() * grid.dz2())
}

/// Per-pixel stationarity residual of the discrete cost; zero at the exact
/// minimizer. Exposed for the consistency checks between the cost, its
/// numerical gradient and the Jacobi fixed point.
pub fn hs_residual(flow: &FlowField, stack: &DerivativeStack, alpha: f64) -> (ScalarGrid, ScalarGrid) {
    let (w, h) = stack.dims();
    let alpha2 = alpha * alpha;
    let mut r1 = ScalarGrid::zeros(w, h);
    let mut r2 = ScalarGrid::zeros(w, h);
    for j in 0..h {
        for i in 0..w {
            let m1 = neighbor_mean(&flow.v1, i, j);
            let m2 = neighbor_mean(&flow.v2, i, j);
            let yz1 = stack.yz1.at(i, j);
            let yz2 = stack.yz2.at(i, j);
            let yt = stack.yt.at(i, j);
            let transport = yz1 * flow.v1.at(i, j) + yz2 * flow.v2.at(i, j) + yt;
            r1.set(i, j, yz1 * transport + alpha2 * (flow.v1.at(i, j) - m1));
            r2.set(i, j, yz2 * transport + alpha2 * (flow.v2.at(i, j) - m2));
        }
    }
    (r1, r2)
}
