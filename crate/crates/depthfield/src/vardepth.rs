//! Variational inverse-depth estimation.
//!
//! With known camera motion the brightness transport residual at one pixel is
//! affine in the inverse depth Υ: residual = F + Υ·G, with
//!
//!   F = ∂y/∂t + f₁·∂y/∂z₁ + f₂·∂y/∂z₂,   G = g₁·∂y/∂z₁ + g₂·∂y/∂z₂.
//!
//! Minimizing the rotation-invariant cost
//!
//!   J(Υ) = ∬ ( (F + ΥG)² + α² ∇Υ² ) dσ
//!
//! over the view sphere yields a linear diffusion equation,
//!
//!   Υ G² w + F G w = α² ∇·(c ∇Υ),
//!
//! where w = (1+z₁²+z₂²)^{−3/2} is the solid-angle weight and the diffusion
//! coefficients c₁₁ = (1+z₁²)/√(1+|z|²), c₂₂ = (1+z₂²)/√(1+|z|²),
//! c₁₂ = z₁z₂/√(1+|z|²) carry the curvature of the sphere. Dropping the
//! curvature (c = I, w = 1) gives the small-angle form
//!
//!   Υ G² + F G = α² ΔΥ,
//!
//! solved like the optical-flow system: the Laplacian is approximated by the
//! weighted neighbor mean minus the center and the linear system is iterated
//! with a Jacobi scheme. Note the two conventions give α different scales:
//! the stencil form absorbs the grid step into α, the flux forms measure it
//! in pinhole units.

use crate::error::{Error, Result};
use crate::flow::{neighbor_mean, smoothness_energy, DerivativeStack};
use crate::geometry::{motion_coeffs, solid_angle_weight, MotionSample, PixelGrid};
use crate::grid::{GammaField, ScalarGrid};

/// Per-pixel data terms of the variational cost.
#[derive(Debug, Clone)]
pub struct DataTerms {
    pub f: ScalarGrid,
    pub g: ScalarGrid,
}

impl DataTerms {
    pub fn dims(&self) -> (usize, usize) {
        self.f.dims()
    }
}

/// Discretization of the smoothness operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// Neighbor-mean stencil of the small-angle equation; α in stencil units.
    HsStencil,
    /// Divergence-form spherical operator with half-index coefficient
    /// averaging; α in pinhole units.
    RiemannianFlux,
    /// Same flux discretization with the curvature dropped (c = I, w = 1).
    EuclideanFlux,
}

/// Solver parameters for the inverse-depth diffusion.
#[derive(Debug, Clone)]
pub struct VarConfig {
    /// Regularization weight.
    pub alpha: f64,
    /// Maximum Jacobi sweeps per frame.
    pub iterations: usize,
    /// Use the small-angle stencil scheme (the default); otherwise the full
    /// spherical flux operator.
    pub small_angle: bool,
    /// Inverse depth floor applied after the final sweep.
    pub clamp_min: f64,
    /// Reuse the previous frame's estimate as the initial iterate.
    pub warm_start: bool,
}

impl Default for VarConfig {
    fn default() -> Self {
        VarConfig {
            alpha: 300.0,
            iterations: 200,
            small_angle: true,
            clamp_min: 0.0,
            warm_start: true,
        }
    }
}

impl VarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::Invalid("alpha must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Invalid("need at least one iteration".into()));
        }
        Ok(())
    }

    pub fn laplacian(&self) -> LaplacianKind {
        if self.small_angle {
            LaplacianKind::HsStencil
        } else {
            LaplacianKind::RiemannianFlux
        }
    }
}

/// Early-exit threshold on the max inverse-depth update of a sweep, 1/m.
pub const GAMMA_EARLY_EXIT: f64 = 1e-8;

/// Evaluates F and G from the derivative stack and the motion sample, in
/// per-frame time units: both terms are multiplied by the frame interval
/// `dt`. The quotient −F/G is unchanged by this common factor, but it sets
/// the scale the regularization weight α works against — per-frame data is
/// the scale the reference gains were tuned on. Pass `dt = 1` for
/// per-second terms.
pub fn data_terms(
    stack: &DerivativeStack,
    m: &MotionSample,
    grid: &PixelGrid,
    dt: f64,
) -> Result<DataTerms> {
    if stack.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: stack.dims(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    let (w, h) = grid.dims();
    let mut f = ScalarGrid::zeros(w, h);
    let mut g = ScalarGrid::zeros(w, h);
    for j in 0..h {
        for i in 0..w {
            let (z1, z2) = grid.z(i, j);
            let c = motion_coeffs(z1, z2, m);
            let yz1 = stack.yz1.at(i, j);
            let yz2 = stack.yz2.at(i, j);
            f.set(i, j, dt * (stack.yt.at(i, j) + c.f1 * yz1 + c.f2 * yz2));
            g.set(i, j, dt * (c.g1 * yz1 + c.g2 * yz2));
        }
    }
    Ok(DataTerms { f, g })
}

/// Precomputed 9-point stencil of a divergence-form operator ∇·(c∇u) with
/// Neumann boundaries (no flux through missing edges). Assembled from
/// per-edge and per-corner energy contributions, so the operator is exactly
/// self-adjoint and annihilates constants.
#[derive(Debug, Clone)]
pub struct FluxStencil {
    width: usize,
    height: usize,
    /// Coefficients per pixel in offset order
    /// (0,0),(1,0),(-1,0),(0,1),(0,-1),(1,1),(-1,1),(1,-1),(-1,-1).
    coeffs: Vec<[f64; 9]>,
}

const STENCIL_OFFSETS: [(isize, isize); 9] = [
    (0, 0),
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
];

fn offset_slot(di: isize, dj: isize) -> usize {
    STENCIL_OFFSETS
        .iter()
        .position(|&(a, b)| (a, b) == (di, dj))
        .expect("offset within stencil")
}

fn curvature_coeffs(z1: f64, z2: f64) -> (f64, f64, f64) {
    let s = (1.0 + z1 * z1 + z2 * z2).sqrt();
    ((1.0 + z1 * z1) / s, (1.0 + z2 * z2) / s, z1 * z2 / s)
}

impl FluxStencil {
    pub fn assemble(grid: &PixelGrid, kind: LaplacianKind) -> Self {
        assert!(kind != LaplacianKind::HsStencil, "stencil form has no flux assembly");
        let riemannian = kind == LaplacianKind::RiemannianFlux;
        let (w, h) = grid.dims();
        let d1 = grid.dz1();
        let d2 = grid.dz2();
        let mut coeffs = vec![[0.0; 9]; w * h];
        let c_at = |i: usize, j: usize| -> (f64, f64, f64) {
            if riemannian {
                let (z1, z2) = grid.z(i, j);
                curvature_coeffs(z1, z2)
            } else {
                (1.0, 1.0, 0.0)
            }
        };
        let idx = |i: usize, j: usize| j * w + i;
        let e_slot = offset_slot(1, 0);
        let w_slot = offset_slot(-1, 0);
        let s_slot = offset_slot(0, 1);
        let n_slot = offset_slot(0, -1);
        let se_slot = offset_slot(1, 1);
        let sw_slot = offset_slot(-1, 1);
        let ne_slot = offset_slot(1, -1);
        let nw_slot = offset_slot(-1, -1);

        // horizontal fluxes
        for j in 0..h {
            for i in 0..w - 1 {
                let a = 0.5 * (c_at(i, j).0 + c_at(i + 1, j).0) / (d1 * d1);
                coeffs[idx(i, j)][0] -= a;
                coeffs[idx(i, j)][e_slot] += a;
                coeffs[idx(i + 1, j)][0] -= a;
                coeffs[idx(i + 1, j)][w_slot] += a;
            }
        }
        // vertical fluxes
        for j in 0..h - 1 {
            for i in 0..w {
                let b = 0.5 * (c_at(i, j).1 + c_at(i, j + 1).1) / (d2 * d2);
                coeffs[idx(i, j)][0] -= b;
                coeffs[idx(i, j)][s_slot] += b;
                coeffs[idx(i, j + 1)][0] -= b;
                coeffs[idx(i, j + 1)][n_slot] += b;
            }
        }
        // mixed terms on cell corners
        if riemannian {
            for j in 0..h - 1 {
                for i in 0..w - 1 {
                    let c12 = 0.25
                        * (c_at(i, j).2 + c_at(i + 1, j).2 + c_at(i, j + 1).2 + c_at(i + 1, j + 1).2);
                    let kappa = c12 / (4.0 * d1 * d2);
                    // corner pixels: p0=(i,j) p1=(i+1,j) p2=(i,j+1) p3=(i+1,j+1)
                    coeffs[idx(i, j)][0] -= 2.0 * kappa;
                    coeffs[idx(i, j)][se_slot] += 2.0 * kappa;
                    coeffs[idx(i + 1, j)][0] += 2.0 * kappa;
                    coeffs[idx(i + 1, j)][sw_slot] -= 2.0 * kappa;
                    coeffs[idx(i, j + 1)][0] += 2.0 * kappa;
                    coeffs[idx(i, j + 1)][ne_slot] -= 2.0 * kappa;
                    coeffs[idx(i + 1, j + 1)][0] -= 2.0 * kappa;
                    coeffs[idx(i + 1, j + 1)][nw_slot] += 2.0 * kappa;
                }
            }
        }
        FluxStencil {
            width: w,
            height: h,
            coeffs,
        }
    }

    #[inline]
    pub fn diag(&self, i: usize, j: usize) -> f64 {
        self.coeffs[j * self.width + i][0]
    }

    /// Off-diagonal application: Σ_{q≠p} L_pq u(q).
    #[inline]
    pub fn offdiag(&self, u: &ScalarGrid, i: usize, j: usize) -> f64 {
        let c = &self.coeffs[j * self.width + i];
        let mut acc = 0.0;
        for (slot, (di, dj)) in STENCIL_OFFSETS.iter().enumerate().skip(1) {
            let cc = c[slot];
            if cc != 0.0 {
                let ii = i as isize + di;
                let jj = j as isize + dj;
                acc += cc * u.at(ii as usize, jj as usize);
            }
        }
        acc
    }

    pub fn apply(&self, u: &ScalarGrid) -> ScalarGrid {
        let mut out = ScalarGrid::zeros(self.width, self.height);
        out.fill_rows(|j, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = self.diag(i, j) * u.at(i, j) + self.offdiag(u, i, j);
            }
        });
        out
    }

    /// Smoothness energy whose gradient is −2·apply: evaluated directly from
    /// the edge and corner terms, an independent arithmetic path from the
    /// assembled stencil.
    pub fn energy(&self, grid: &PixelGrid, kind: LaplacianKind, u: &ScalarGrid) -> f64 {
        let riemannian = kind == LaplacianKind::RiemannianFlux;
        let (w, h) = grid.dims();
        let d1 = grid.dz1();
        let d2 = grid.dz2();
        let c_at = |i: usize, j: usize| -> (f64, f64, f64) {
            if riemannian {
                let (z1, z2) = grid.z(i, j);
                curvature_coeffs(z1, z2)
            } else {
                (1.0, 1.0, 0.0)
            }
        };
        let mut acc = 0.0;
        for j in 0..h {
            for i in 0..w - 1 {
                let c11 = 0.5 * (c_at(i, j).0 + c_at(i + 1, j).0);
                let du = (u.at(i + 1, j) - u.at(i, j)) / d1;
                acc += c11 * du * du;
            }
        }
        for j in 0..h - 1 {
            for i in 0..w {
                let c22 = 0.5 * (c_at(i, j).1 + c_at(i, j + 1).1);
                let du = (u.at(i, j + 1) - u.at(i, j)) / d2;
                acc += c22 * du * du;
            }
        }
        if riemannian {
            for j in 0..h - 1 {
                for i in 0..w - 1 {
                    let c12 = 0.25
                        * (c_at(i, j).2 + c_at(i + 1, j).2 + c_at(i, j + 1).2 + c_at(i + 1, j + 1).2);
                    let u1 = 0.5
                        * ((u.at(i + 1, j) - u.at(i, j)) + (u.at(i + 1, j + 1) - u.at(i, j + 1)))
                        / d1;
                    let u2 = 0.5
                        * ((u.at(i, j + 1) - u.at(i, j)) + (u.at(i + 1, j + 1) - u.at(i + 1, j)))
                        / d2;
                    acc += 2.0 * c12 * u1 * u2;
                }
            }
        }
        acc
    }
}

/// Discrete spherical Laplacian ∇·(c∇u) with Neumann boundaries.
pub fn riemannian_laplacian(field: &ScalarGrid, grid: &PixelGrid) -> Result<ScalarGrid> {
    if field.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: field.dims(),
        });
    }
    Ok(FluxStencil::assemble(grid, LaplacianKind::RiemannianFlux).apply(field))
}

/// Jacobi iteration on the inverse-depth stationarity system.
pub fn solve_gamma(
    terms: &DataTerms,
    cfg: &VarConfig,
    grid: &PixelGrid,
    init: &GammaField,
) -> Result<GammaField> {
    solve_gamma_with(terms, cfg, grid, init, cfg.laplacian())
}

/// Same solver with an explicit operator choice; `EuclideanFlux` exists to
/// isolate the curvature terms when judging the small-angle approximation.
pub fn solve_gamma_with(
    terms: &DataTerms,
    cfg: &VarConfig,
    grid: &PixelGrid,
    init: &GammaField,
    kind: LaplacianKind,
) -> Result<GammaField> {
    cfg.validate()?;
    if terms.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: terms.dims(),
        });
    }
    terms.f.check_same_dims(&init.values)?;
    if !init.values.all_finite() {
        return Err(Error::Invalid("initial inverse depth must be finite".into()));
    }
    let (w, h) = grid.dims();
    let alpha2 = cfg.alpha * cfg.alpha;
    let mut u = init.values.clone();
    let mut next = ScalarGrid::zeros(w, h);

    match kind {
        LaplacianKind::HsStencil => {
            for _ in 0..cfg.iterations {
                let max_update = {
                    use rayon::prelude::*;
                    let rows: Vec<f64> = next
                        .values_mut()
                        .par_chunks_mut(w)
                        .enumerate()
                        .map(|(j, row)| {
                            let mut m = 0.0_f64;
                            for (i, out) in row.iter_mut().enumerate() {
                                let mean = neighbor_mean(&u, i, j);
                                let f = terms.f.at(i, j);
                                let g = terms.g.at(i, j);
                                let v = (alpha2 * mean - f * g) / (alpha2 + g * g);
                                m = m.max((v - u.at(i, j)).abs());
                                *out = v;
                            }
                            m
                        })
                        .collect();
                    rows.into_iter().fold(0.0, f64::max)
                };
                std::mem::swap(&mut u, &mut next);
                if max_update < GAMMA_EARLY_EXIT {
                    break;
                }
            }
        }
        LaplacianKind::RiemannianFlux | LaplacianKind::EuclideanFlux => {
            let stencil = FluxStencil::assemble(grid, kind);
            let weight = |i: usize, j: usize| -> f64 {
                if kind == LaplacianKind::RiemannianFlux {
                    let (z1, z2) = grid.z(i, j);
                    solid_angle_weight(z1, z2)
                } else {
                    1.0
                }
            };
            for _ in 0..cfg.iterations {
                let max_update = {
                    use rayon::prelude::*;
                    let rows: Vec<f64> = next
                        .values_mut()
                        .par_chunks_mut(w)
                        .enumerate()
                        .map(|(j, row)| {
                            let mut m = 0.0_f64;
                            for (i, out) in row.iter_mut().enumerate() {
                                let f = terms.f.at(i, j);
                                let g = terms.g.at(i, j);
                                let sw = weight(i, j);
                                let num = alpha2 * stencil.offdiag(&u, i, j) - f * g * sw;
                                let den = g * g * sw - alpha2 * stencil.diag(i, j);
                                let v = num / den;
                                m = m.max((v - u.at(i, j)).abs());
                                *out = v;
                            }
                            m
                        })
                        .collect();
                    rows.into_iter().fold(0.0, f64::max)
                };
                std::mem::swap(&mut u, &mut next);
                if max_update < GAMMA_EARLY_EXIT {
                    break;
                }
            }
        }
    }
    if cfg.clamp_min > f64::NEG_INFINITY {
        let floor = cfg.clamp_min;
        u = u.map(|v| v.max(floor));
    }
    Ok(GammaField { values: u })
}

/// Discrete invariant cost J of a candidate inverse-depth field: the
/// solid-angle-weighted transport residual plus α² times the spherical
/// gradient energy, midpoint quadrature over the pixel cells.
pub fn cost_j(
    gamma: &GammaField,
    terms: &DataTerms,
    grid: &PixelGrid,
    alpha: f64,
) -> Result<f64> {
    cost_j_with(gamma, terms, grid, alpha, LaplacianKind::RiemannianFlux)
}

pub fn cost_j_with(
    gamma: &GammaField,
    terms: &DataTerms,
    grid: &PixelGrid,
    alpha: f64,
    kind: LaplacianKind,
) -> Result<f64> {
    gamma.values.check_same_dims(&terms.f)?;
    if terms.dims() != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: grid.dims(),
            got: terms.dims(),
        });
    }
    let (w, h) = grid.dims();
    let mu = grid.dz1() * grid.dz2();
    let mut data = 0.0;
    for j in 0..h {
        for i in 0..w {
            let (z1, z2) = grid.z(i, j);
            let sw = if kind == LaplacianKind::RiemannianFlux {
                solid_angle_weight(z1, z2)
            } else {
                1.0
            };
            let r = terms.f.at(i, j) + gamma.values.at(i, j) * terms.g.at(i, j);
            data += r * r * sw;
        }
    }
    let smooth = match kind {
        LaplacianKind::HsStencil => smoothness_energy(&gamma.values),
        _ => FluxStencil::assemble(grid, kind).energy(grid, kind, &gamma.values),
    };
    Ok((data + alpha * alpha * smooth) * mu)
}

/// Stationarity residual of the discrete system `solve_gamma_with` iterates
/// on; zero at the exact minimizer of the matching cost.
pub fn gamma_residual(
    gamma: &GammaField,
    terms: &DataTerms,
    grid: &PixelGrid,
    alpha: f64,
    kind: LaplacianKind,
) -> Result<ScalarGrid> {
    gamma.values.check_same_dims(&terms.f)?;
    let (w, h) = grid.dims();
    let alpha2 = alpha * alpha;
    let mut r = ScalarGrid::zeros(w, h);
    match kind {
        LaplacianKind::HsStencil => {
            for j in 0..h {
                for i in 0..w {
                    let u = gamma.values.at(i, j);
                    let f = terms.f.at(i, j);
                    let g = terms.g.at(i, j);
                    let mean = neighbor_mean(&gamma.values, i, j);
                    r.set(i, j, g * (f + u * g) + alpha2 * (u - mean));
                }
            }
        }
        _ => {
            let stencil = FluxStencil::assemble(grid, kind);
            let lap = stencil.apply(&gamma.values);
            for j in 0..h {
                for i in 0..w {
                    let (z1, z2) = grid.z(i, j);
                    let sw = if kind == LaplacianKind::RiemannianFlux {
                        solid_angle_weight(z1, z2)
                    } else {
                        1.0
                    };
                    let u = gamma.values.at(i, j);
                    let f = terms.f.at(i, j);
                    let g = terms.g.at(i, j);
                    r.set(i, j, g * (f + u * g) * sw - alpha2 * lap.at(i, j));
                }
            }
        }
    }
    Ok(r)
}
