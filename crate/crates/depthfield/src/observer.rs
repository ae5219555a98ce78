//! Asymptotic depth observers.
//!
//! Both observers integrate a copy of the depth transport dynamics with an
//! innovation term pulling the estimate toward the measured data:
//!
//!   ∂D̂/∂t = −∂D̂/∂z₁·V₁ − ∂D̂/∂z₂·V₂ − v·η + correction
//!
//! The flow observer advects by a measured optical flow V and corrects with
//! k·(g₁(D̂f₁+g₁−D̂V₁) + g₂(D̂f₂+g₂−D̂V₂)); with exact flow the correction
//! reduces to k‖g‖²Γ(D−D̂), so the error contracts wherever the translational
//! excitation ‖g‖² is positive. The inverse-depth observer advects by
//! f + Γ·g and corrects with k·(1−D̂Γ).
//!
//! Time stepping is explicit Euler with first-order upwind differences taken
//! against the advection direction. Where the upwind neighbor falls outside
//! the image (an inflow border) the normal derivative is dropped, which is
//! the Neumann rule for borders the flow enters through. Substeps are added
//! automatically until the advection CFL number and the correction rate per
//! substep are both below 0.9.

use crate::error::{Error, Result};
use crate::flow::{horn_schunck, spatial_derivatives, FlowField, HsConfig};
use crate::geometry::{excitation_squared, motion_coeffs, MotionSample, PixelGrid};
use crate::grid::{BrightnessField, DepthField, GammaField, ScalarGrid};
use crate::metrics::{error_report, ErrorReport};
use crate::vardepth::{data_terms, solve_gamma, VarConfig};

/// Depth estimates are clamped to this range after every substep to keep the
/// positivity hypothesis; clamp events are counted and reported.
pub const DEPTH_CLAMP_MIN: f64 = 0.1;
pub const DEPTH_CLAMP_MAX: f64 = 100.0;

/// Stability margin on the per-substep CFL number and correction rate.
const STEP_MARGIN: f64 = 0.9;

/// Observer integration parameters.
#[derive(Debug, Clone)]
pub struct ObserverConfig {
    /// Correction gain. Units differ between the two observers: s·m⁻² for
    /// the flow observer, s·m⁻¹ for the inverse-depth observer.
    pub k: f64,
    /// Frame interval, seconds.
    pub dt: f64,
    /// Minimum substeps per frame step.
    pub substeps: usize,
    /// Constant initial estimate, meters.
    pub init_depth: f64,
    /// Hard cap on automatic substepping.
    pub max_substeps: usize,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            k: 50.0,
            dt: 1.0 / 60.0,
            substeps: 1,
            init_depth: 5.0,
            max_substeps: 4096,
        }
    }
}

impl ObserverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 0.0 {
            return Err(Error::Invalid("gain must be nonnegative".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Invalid("dt must be positive".into()));
        }
        if self.substeps == 0 || self.max_substeps < self.substeps {
            return Err(Error::Invalid("substep bounds are inconsistent".into()));
        }
        Ok(())
    }
}

/// What one frame step did: substeps actually taken and clamp events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepStats {
    pub substeps: usize,
    pub clamps: usize,
}

/// Per-pixel correction of the flow observer,
/// g₁(D̂f₁+g₁−D̂V₁) + g₂(D̂f₂+g₂−D̂V₂) (gain not included).
#[inline]
pub fn flow_innovation(c: &crate::geometry::MotionCoeffs, dhat: f64, v1: f64, v2: f64) -> f64 {
    c.g1 * (dhat * c.f1 + c.g1 - dhat * v1) + c.g2 * (dhat * c.f2 + c.g2 - dhat * v2)
}

/// Shared explicit upwind transport core. The advection field, source and
/// the affine correction coefficients (corr = a + b·D̂) are frozen over the
/// frame step.
fn transport_step(
    dhat: &ScalarGrid,
    adv1: &ScalarGrid,
    adv2: &ScalarGrid,
    source: &ScalarGrid,
    corr_a: &ScalarGrid,
    corr_b: &ScalarGrid,
    grid: &PixelGrid,
    cfg: &ObserverConfig,
) -> Result<(ScalarGrid, StepStats)> {
    cfg.validate()?;
    let (w, h) = grid.dims();
    let dz1 = grid.dz1();
    let dz2 = grid.dz2();

    let mut adv_rate = 0.0_f64;
    let mut react_rate = 0.0_f64;
    for idx in 0..w * h {
        adv_rate = adv_rate.max(adv1.values()[idx].abs() / dz1 + adv2.values()[idx].abs() / dz2);
        react_rate = react_rate.max(corr_b.values()[idx].abs());
    }
    let needed = ((adv_rate * cfg.dt / STEP_MARGIN).ceil() as usize)
        .max((react_rate * cfg.dt / STEP_MARGIN).ceil() as usize)
        .max(cfg.substeps)
        .max(1);
    if needed > cfg.max_substeps {
        return Err(Error::Invalid(format!(
            "stability requires {needed} substeps, above the cap {}",
            cfg.max_substeps
        )));
    }
    let dts = cfg.dt / needed as f64;

    let mut cur = dhat.clone();
    let mut next = ScalarGrid::zeros(w, h);
    let mut clamps = 0usize;
    for _ in 0..needed {
        use rayon::prelude::*;
        let row_clamps: Vec<usize> = next
            .values_mut()
            .par_chunks_mut(w)
            .enumerate()
            .map(|(j, row)| {
                let mut local_clamps = 0usize;
                for (i, out) in row.iter_mut().enumerate() {
                    let d = cur.at(i, j);
                    let v1 = adv1.at(i, j);
                    let v2 = adv2.at(i, j);
                    // upwind differences; missing upwind neighbor => Neumann
                    let d1 = if v1 > 0.0 {
                        if i > 0 {
                            (d - cur.at(i - 1, j)) / dz1
                        } else {
                            0.0
                        }
                    } else if v1 < 0.0 {
                        if i + 1 < w {
                            (cur.at(i + 1, j) - d) / dz1
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    };
                    let d2 = if v2 > 0.0 {
                        if j > 0 {
                            (d - cur.at(i, j - 1)) / dz2
                        } else {
                            0.0
                        }
                    } else if v2 < 0.0 {
                        if j + 1 < h {
                            (cur.at(i, j + 1) - d) / dz2
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    };
                    let rate = -d1 * v1 - d2 * v2 + source.at(i, j) + corr_a.at(i, j)
                        + corr_b.at(i, j) * d;
                    let raw = d + dts * rate;
                    let clamped = raw.clamp(DEPTH_CLAMP_MIN, DEPTH_CLAMP_MAX);
                    if clamped != raw {
                        local_clamps += 1;
                    }
                    *out = clamped;
                }
                local_clamps
            })
            .collect();
        clamps += row_clamps.iter().sum::<usize>();
        std::mem::swap(&mut cur, &mut next);
    }
    Ok((
        cur,
        StepStats {
            substeps: needed,
            clamps,
        },
    ))
}

/// Source term −v·η in pinhole coordinates.
fn source_field(grid: &PixelGrid, m: &MotionSample) -> ScalarGrid {
    let (w, h) = grid.dims();
    ScalarGrid::from_fn(w, h, |i, j| {
        let (z1, z2) = grid.z(i, j);
        -(z1 * m.v.x + z2 * m.v.y + m.v.z) / (1.0 + z1 * z1 + z2 * z2).sqrt()
    })
}

/// One frame step of the observer driven by a measured optical flow.
pub fn observer_flow_step(
    dhat: &DepthField,
    flow: &FlowField,
    m: &MotionSample,
    grid: &PixelGrid,
    cfg: &ObserverConfig,
) -> Result<(DepthField, StepStats)> {
    dhat.values.check_same_dims(&flow.v1)?;
    if dhat.values.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: dhat.values.dims(),
        });
    }
    let (w, h) = grid.dims();
    let source = source_field(grid, m);
    let mut corr_a = ScalarGrid::zeros(w, h);
    let mut corr_b = ScalarGrid::zeros(w, h);
    for j in 0..h {
        for i in 0..w {
            let (z1, z2) = grid.z(i, j);
            let c = motion_coeffs(z1, z2, m);
            corr_a.set(i, j, cfg.k * (c.g1 * c.g1 + c.g2 * c.g2));
            corr_b.set(
                i,
                j,
                cfg.k * (c.g1 * (c.f1 - flow.v1.at(i, j)) + c.g2 * (c.f2 - flow.v2.at(i, j))),
            );
        }
    }
    let (values, stats) =
        transport_step(&dhat.values, &flow.v1, &flow.v2, &source, &corr_a, &corr_b, grid, cfg)?;
    Ok((DepthField { values }, stats))
}

/// One frame step of the observer driven by an inverse-depth estimate.
pub fn observer_gamma_step(
    dhat: &DepthField,
    gamma_hs: &GammaField,
    m: &MotionSample,
    grid: &PixelGrid,
    cfg: &ObserverConfig,
) -> Result<(DepthField, StepStats)> {
    dhat.values.check_same_dims(&gamma_hs.values)?;
    if dhat.values.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: dhat.values.dims(),
        });
    }
    let (w, h) = grid.dims();
    let mut adv1 = ScalarGrid::zeros(w, h);
    let mut adv2 = ScalarGrid::zeros(w, h);
    let mut corr_b = ScalarGrid::zeros(w, h);
    for j in 0..h {
        for i in 0..w {
            let (z1, z2) = grid.z(i, j);
            let c = motion_coeffs(z1, z2, m);
            let g = gamma_hs.values.at(i, j);
            adv1.set(i, j, c.f1 + g * c.g1);
            adv2.set(i, j, c.f2 + g * c.g2);
            corr_b.set(i, j, -cfg.k * g);
        }
    }
    let source = source_field(grid, m);
    let corr_a = ScalarGrid::constant(w, h, cfg.k);
    let (values, stats) =
        transport_step(&dhat.values, &adv1, &adv2, &source, &corr_a, &corr_b, grid, cfg)?;
    Ok((DepthField { values }, stats))
}

/// Diagnostic map of accumulated translational excitation Σ‖g‖²·dt per
/// pixel, holding the viewing direction fixed. Trajectories whose map stays
/// near zero somewhere cannot converge there.
pub fn excitation_map(motions: &[MotionSample], grid: &PixelGrid, dt: f64) -> Result<ScalarGrid> {
    if motions.is_empty() {
        return Err(Error::Invalid("empty motion list".into()));
    }
    let (w, h) = grid.dims();
    let mut map = ScalarGrid::zeros(w, h);
    for m in motions {
        for j in 0..h {
            for i in 0..w {
                let (z1, z2) = grid.z(i, j);
                map.set(i, j, map.at(i, j) + excitation_squared(z1, z2, &m.v) * dt);
            }
        }
    }
    Ok(map)
}

/// Estimation pipeline selector.
#[derive(Debug, Clone)]
pub enum RunMode {
    /// Horn-Schunck flow (or externally supplied flow) feeding the flow
    /// observer.
    FlowObserver { external_flow: Option<Vec<FlowField>> },
    /// Variational inverse depth feeding the inverse-depth observer.
    GammaObserver,
    /// Variational inverse depth alone, reported as 1/Γ.
    VariationalOnly,
}

/// Input of a full observer run: frames, synchronized motion, and optional
/// ground truth for error reporting.
#[derive(Debug, Clone)]
pub struct ObserverInput {
    pub frames: Vec<BrightnessField>,
    pub motions: Vec<MotionSample>,
    pub grid: PixelGrid,
    pub truth: Option<Vec<DepthField>>,
    pub dt: f64,
}

impl ObserverInput {
    pub fn from_sequence(seq: &crate::scene::SyntheticSequence) -> Self {
        ObserverInput {
            frames: seq.frames.clone(),
            motions: seq.motions.clone(),
            grid: seq.grid,
            truth: Some(seq.truth_depth.clone()),
            dt: seq.dt(),
        }
    }
}

/// Knobs of the full pipeline.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub observer: ObserverConfig,
    pub hs_alpha: f64,
    pub hs_iterations: usize,
    pub var: VarConfig,
    /// Constant inverse-depth initialization of the variational solver, 1/m.
    pub gamma_init: f64,
    /// Box-filter passes applied to the frames before differentiation.
    pub presmooth: usize,
    /// Divide each frame by its mean intensity first (compensates global
    /// illumination changes in real footage).
    pub normalize_intensity: bool,
    /// Compute error reports against ground truth.
    pub metrics: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            observer: ObserverConfig::default(),
            hs_alpha: 2000.0,
            hs_iterations: 100,
            var: VarConfig::default(),
            gamma_init: 0.2,
            presmooth: 0,
            normalize_intensity: false,
            metrics: true,
        }
    }
}

/// Everything a run produces; flows and inverse-depth fields are kept for
/// export.
#[derive(Debug, Clone)]
pub struct ObserverRun {
    /// Depth estimate per frame. For the observers, index 0 is the initial
    /// estimate; for the variational mode estimates start at frame 1.
    pub estimates: Vec<DepthField>,
    /// Frame index of `estimates[0]`.
    pub first_frame: usize,
    pub reports: Vec<ErrorReport>,
    pub flows: Vec<FlowField>,
    pub gammas: Vec<GammaField>,
}

/// Runs the selected estimation pipeline over the whole sequence. The step
/// from frame k to k+1 uses the midpoint motion of the two samples, matching
/// the time centering of the derivative filters.
pub fn run_observer(input: &ObserverInput, mode: &RunMode, cfg: &RunConfig) -> Result<ObserverRun> {
    if input.frames.len() < 2 {
        return Err(Error::Invalid("need at least two frames".into()));
    }
    if input.frames.len() != input.motions.len() {
        return Err(Error::Invalid(format!(
            "{} frames but {} motion samples",
            input.frames.len(),
            input.motions.len()
        )));
    }
    if cfg.metrics && input.truth.is_none() {
        return Err(Error::Invalid(
            "error metrics requested but the input carries no ground truth".into(),
        ));
    }
    if let RunMode::FlowObserver {
        external_flow: Some(flows),
    } = mode
    {
        if flows.len() != input.frames.len() - 1 {
            return Err(Error::Invalid(format!(
                "{} external flow fields for {} frame pairs",
                flows.len(),
                input.frames.len() - 1
            )));
        }
    }
    let grid = &input.grid;
    let (w, h) = grid.dims();
    let n = input.frames.len();
    let dt = input.dt;

    let frames: Vec<BrightnessField> = if cfg.normalize_intensity {
        input
            .frames
            .iter()
            .map(crate::metrics::normalize_intensity)
            .collect::<Result<_>>()?
    } else {
        input.frames.clone()
    };

    let mut estimates = Vec::with_capacity(n);
    let mut reports = Vec::new();
    let mut flows = Vec::new();
    let mut gammas = Vec::new();

    let variational_only = matches!(mode, RunMode::VariationalOnly);
    let first_frame = usize::from(variational_only);
    let mut dhat = DepthField::constant(w, h, cfg.observer.init_depth);
    let mut report_for = |frame: usize, d: &DepthField, clamps: usize| -> Result<()> {
        if !cfg.metrics {
            return Ok(());
        }
        let truth = &input.truth.as_ref().unwrap()[frame];
        let t = input.motions[frame].t;
        reports.push(error_report(frame, t, d, truth, grid, clamps)?);
        Ok(())
    };

    if !variational_only {
        estimates.push(dhat.clone());
        report_for(0, &dhat, 0)?;
    }

    let mut prev_flow: Option<FlowField> = None;
    let mut prev_gamma: Option<GammaField> = None;

    for k in 0..n - 1 {
        let m = MotionSample::midpoint(&input.motions[k], &input.motions[k + 1]);
        let mut step_cfg = cfg.observer.clone();
        step_cfg.dt = dt;
        let stats;
        match mode {
            RunMode::FlowObserver { external_flow } => {
                let flow = match external_flow {
                    Some(list) => list[k].clone(),
                    None => {
                        let stack =
                            spatial_derivatives(&frames[k], &frames[k + 1], grid, dt, cfg.presmooth)?;
                        let hs_cfg = HsConfig {
                            alpha: cfg.hs_alpha,
                            iterations: cfg.hs_iterations,
                            init: prev_flow.take(),
                        };
                        horn_schunck(&stack, &hs_cfg)?
                    }
                };
                let (next, st) = observer_flow_step(&dhat, &flow, &m, grid, &step_cfg)?;
                dhat = next;
                stats = st;
                prev_flow = Some(flow.clone());
                flows.push(flow);
            }
            RunMode::GammaObserver | RunMode::VariationalOnly => {
                let stack = spatial_derivatives(&frames[k], &frames[k + 1], grid, dt, cfg.presmooth)?;
                let terms = data_terms(&stack, &m, grid, dt)?;
                let init = match (&prev_gamma, cfg.var.warm_start) {
                    (Some(g), true) => g.clone(),
                    _ => GammaField::constant(w, h, cfg.gamma_init),
                };
                let gamma = solve_gamma(&terms, &cfg.var, grid, &init)?;
                if variational_only {
                    dhat = gamma.to_depth(1.0 / DEPTH_CLAMP_MAX);
                    dhat.values = dhat
                        .values
                        .map(|d| d.clamp(DEPTH_CLAMP_MIN, DEPTH_CLAMP_MAX));
                    stats = StepStats {
                        substeps: 0,
                        clamps: 0,
                    };
                } else {
                    let (next, st) = observer_gamma_step(&dhat, &gamma, &m, grid, &step_cfg)?;
                    dhat = next;
                    stats = st;
                }
                prev_gamma = Some(gamma.clone());
                gammas.push(gamma);
            }
        }
        estimates.push(dhat.clone());
        report_for(k + 1, &dhat, stats.clamps)?;
    }

    Ok(ObserverRun {
        estimates,
        first_frame,
        reports,
        flows,
        gammas,
    })
}
