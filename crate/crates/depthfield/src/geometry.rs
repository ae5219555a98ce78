//! Camera model, pinhole coordinates and the kinematic coefficient fields
//! shared by every estimator.
//!
//! A pixel is identified with a viewing direction η on the unit sphere. In
//! pinhole coordinates the pixel (z₁, z₂) corresponds to
//! η = (z₁, z₂, 1)/√(1+z₁²+z₂²), with z₁ increasing left to right and z₂
//! increasing top to bottom. Apparent image velocity decomposes into a purely
//! rotational part and an inverse-depth-scaled translational part,
//!
//!   V₁ = f₁(z, ω) + Γ·g₁(z, v),   V₂ = f₂(z, ω) + Γ·g₂(z, v),
//!
//! and those four coefficient fields drive both the variational estimator and
//! the observers.

use nalgebra::{UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Rectangular pixel grid with its field of view.
///
/// Pixel (i, j) maps to the center of its cell; the outermost pixel centers
/// sit at ±z̄₁ = ±tan(half_fov_h) and ±z̄₂ = ±tan(half_fov_v). The chart is
/// only valid while z̄₁² + z̄₂² < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    half_fov_h: f64,
    half_fov_v: f64,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, half_fov_h: f64, half_fov_v: f64) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Invalid(format!(
                "grid must be at least 2x2, got {width}x{height}"
            )));
        }
        if !(half_fov_h > 0.0 && half_fov_v > 0.0) {
            return Err(Error::Invalid("field of view must be positive".into()));
        }
        let zb1 = half_fov_h.tan();
        let zb2 = half_fov_v.tan();
        if !(zb1 * zb1 + zb2 * zb2 < 1.0) {
            return Err(Error::Invalid(format!(
                "pinhole bounds violate z̄₁²+z̄₂² < 1 (got {})",
                zb1 * zb1 + zb2 * zb2
            )));
        }
        Ok(PixelGrid {
            width,
            height,
            half_fov_h,
            half_fov_v,
        })
    }

    /// Full-angle degrees constructor, the form camera data sheets use.
    pub fn from_fov_degrees(width: usize, height: usize, fov_h: f64, fov_v: f64) -> Result<Self> {
        PixelGrid::new(
            width,
            height,
            (fov_h / 2.0).to_radians(),
            (fov_v / 2.0).to_radians(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn half_fov_h(&self) -> f64 {
        self.half_fov_h
    }

    pub fn half_fov_v(&self) -> f64 {
        self.half_fov_v
    }

    /// Horizontal pinhole bound z̄₁.
    pub fn zbar1(&self) -> f64 {
        self.half_fov_h.tan()
    }

    /// Vertical pinhole bound z̄₂.
    pub fn zbar2(&self) -> f64 {
        self.half_fov_v.tan()
    }

    /// Horizontal pinhole step between adjacent pixel centers.
    pub fn dz1(&self) -> f64 {
        2.0 * self.zbar1() / (self.width - 1) as f64
    }

    /// Vertical pinhole step between adjacent pixel centers.
    pub fn dz2(&self) -> f64 {
        2.0 * self.zbar2() / (self.height - 1) as f64
    }

    /// z₁ coordinate of column i.
    #[inline]
    pub fn z1(&self, i: usize) -> f64 {
        -self.zbar1() + i as f64 * self.dz1()
    }

    /// z₂ coordinate of row j.
    #[inline]
    pub fn z2(&self, j: usize) -> f64 {
        -self.zbar2() + j as f64 * self.dz2()
    }

    pub fn z(&self, i: usize, j: usize) -> (f64, f64) {
        (self.z1(i), self.z2(j))
    }
}

/// Camera linear and angular velocity at one instant, in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample {
    pub v: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub t: f64,
}

impl MotionSample {
    pub fn new(v: Vector3<f64>, omega: Vector3<f64>, t: f64) -> Self {
        MotionSample { v, omega, t }
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|c| c.is_finite())
            && self.omega.iter().all(|c| c.is_finite())
            && self.t.is_finite()
    }

    /// Checks the boundedness hypotheses |v| ≤ v̄, |ω| ≤ ω̄.
    pub fn within_bounds(&self, v_bar: f64, omega_bar: f64) -> bool {
        self.v.norm() <= v_bar && self.omega.norm() <= omega_bar
    }

    /// Component-wise average of two samples, used as a midpoint estimate.
    pub fn midpoint(a: &MotionSample, b: &MotionSample) -> MotionSample {
        MotionSample {
            v: (a.v + b.v) * 0.5,
            omega: (a.omega + b.omega) * 0.5,
            t: (a.t + b.t) * 0.5,
        }
    }
}

/// Camera pose in the reference frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }
}

/// The four kinematic coefficients at one pixel.
///
/// f₁, f₂ carry the rotational flow; g₁, g₂ carry the translational flow per
/// unit inverse depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCoeffs {
    pub f1: f64,
    pub f2: f64,
    pub g1: f64,
    pub g2: f64,
}

/// Evaluates the kinematic coefficients at pinhole coordinates z:
///
///   f₁ = z₁z₂ω₁ − (1+z₁²)ω₂ + z₂ω₃
///   f₂ = (1+z₂²)ω₁ − z₁z₂ω₂ − z₁ω₃
///   g₁ = √(1+z₁²+z₂²)·(−v₁ + z₁v₃)
///   g₂ = √(1+z₁²+z₂²)·(−v₂ + z₂v₃)
pub fn motion_coeffs(z1: f64, z2: f64, m: &MotionSample) -> MotionCoeffs {
    let (w1, w2, w3) = (m.omega.x, m.omega.y, m.omega.z);
    let (v1, v2, v3) = (m.v.x, m.v.y, m.v.z);
    let root = (1.0 + z1 * z1 + z2 * z2).sqrt();
    MotionCoeffs {
        f1: z1 * z2 * w1 - (1.0 + z1 * z1) * w2 + z2 * w3,
        f2: (1.0 + z2 * z2) * w1 - z1 * z2 * w2 - z1 * w3,
        g1: root * (-v1 + z1 * v3),
        g2: root * (-v2 + z2 * v3),
    }
}

/// Unit viewing direction of pixel (i, j) in the camera frame.
pub fn pixel_to_direction(grid: &PixelGrid, i: usize, j: usize) -> Result<Vector3<f64>> {
    if i >= grid.width() || j >= grid.height() {
        return Err(Error::Invalid(format!(
            "pixel ({i}, {j}) outside {}x{} grid",
            grid.width(),
            grid.height()
        )));
    }
    let (z1, z2) = grid.z(i, j);
    Ok(direction_from_z(z1, z2))
}

/// η = (z₁, z₂, 1)/√(1+z₁²+z₂²).
#[inline]
pub fn direction_from_z(z1: f64, z2: f64) -> Vector3<f64> {
    let inv = 1.0 / (1.0 + z1 * z1 + z2 * z2).sqrt();
    Vector3::new(z1 * inv, z2 * inv, inv)
}

/// Apparent velocity at pinhole coordinates z for inverse depth γ.
pub fn predicted_flow(z1: f64, z2: f64, m: &MotionSample, gamma: f64) -> (f64, f64) {
    let c = motion_coeffs(z1, z2, m);
    (c.f1 + gamma * c.g1, c.f2 + gamma * c.g2)
}

/// Quadrature weight converting the planar element dz₁dz₂ to the
/// solid-angle element on the sphere: (1+z₁²+z₂²)^(−3/2).
#[inline]
pub fn solid_angle_weight(z1: f64, z2: f64) -> f64 {
    (1.0 + z1 * z1 + z2 * z2).powf(-1.5)
}

/// Pinhole components of the rotational and translational output fields,
/// ((f₁, f₂), (g₁, g₂)). The observer correction uses g₁²+g₂² as the squared
/// excitation magnitude.
pub fn output_fields(z1: f64, z2: f64, m: &MotionSample) -> ((f64, f64), (f64, f64)) {
    let c = motion_coeffs(z1, z2, m);
    ((c.f1, c.f2), (c.g1, c.g2))
}

/// Squared norm of the translational output field as a tangent vector of the
/// sphere: ‖η×(η×v)‖² = ‖v‖² − (η·v)².
pub fn excitation_squared(z1: f64, z2: f64, v: &Vector3<f64>) -> f64 {
    let eta = direction_from_z(z1, z2);
    let along = eta.dot(v);
    (v.norm_squared() - along * along).max(0.0)
}

/// Integrates the rigid-body kinematics
///
///   dq/dt = ½ q ω,   dC/dt = q v q*
///
/// through the uniformly sampled motion list with a midpoint scheme: the
/// velocities over each step are the average of the endpoint samples, the
/// orientation advances by the exact exponential of that average rate, and
/// the position update uses the half-step orientation. The quaternion is
/// renormalized every step. Returns one pose per motion sample, the first
/// being `initial`.
pub fn integrate_pose(motions: &[MotionSample], dt: f64, initial: Pose) -> Result<Vec<Pose>> {
    if dt <= 0.0 {
        return Err(Error::Invalid("dt must be positive".into()));
    }
    let mut poses = Vec::with_capacity(motions.len());
    let mut pose = initial;
    poses.push(pose);
    for k in 0..motions.len().saturating_sub(1) {
        let m0 = &motions[k];
        let m1 = &motions[k + 1];
        if !m0.is_finite() || !m1.is_finite() {
            return Err(Error::Invalid(format!("non-finite motion sample at index {k}")));
        }
        let v_mid = (m0.v + m1.v) * 0.5;
        let w_mid = (m0.omega + m1.omega) * 0.5;
        let half_rot = UnitQuaternion::from_scaled_axis(w_mid * (dt * 0.5));
        let q_half = pose.orientation * half_rot;
        let position = pose.position + q_half * (v_mid * dt);
        let orientation =
            UnitQuaternion::new_normalize((q_half * half_rot).into_inner());
        pose = Pose {
            position,
            orientation,
        };
        poses.push(pose);
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn still(t: f64) -> MotionSample {
        MotionSample::new(Vector3::zeros(), Vector3::zeros(), t)
    }

    #[test]
    fn grid_rejects_wide_fov() {
        // 90x90 degrees full angle puts tan² + tan² = 2 ≥ 1.
        assert!(PixelGrid::from_fov_degrees(10, 10, 90.0, 90.0).is_err());
        assert!(PixelGrid::from_fov_degrees(10, 10, 50.0, 40.0).is_ok());
    }

    #[test]
    fn grid_axis_convention() {
        let g = PixelGrid::from_fov_degrees(5, 5, 50.0, 40.0).unwrap();
        // left to right, top to bottom
        assert!(g.z1(0) < 0.0 && g.z1(4) > 0.0);
        assert!(g.z2(0) < 0.0 && g.z2(4) > 0.0);
        assert!((g.z1(4) - g.zbar1()).abs() < 1e-15);
        assert!((g.z2(2)).abs() < 1e-15);
    }

    #[test]
    fn center_pixel_is_optical_axis() {
        let g = PixelGrid::from_fov_degrees(5, 5, 50.0, 40.0).unwrap();
        let eta = pixel_to_direction(&g, 2, 2).unwrap();
        assert!((eta - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn direction_matches_hand_normalization() {
        // z = (1, 0) → (1, 0, 1)/√2
        let eta = direction_from_z(1.0, 0.0);
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((eta - Vector3::new(s, 0.0, s)).norm() < 1e-15);
    }

    #[test]
    fn directions_are_unit_norm() {
        let g = PixelGrid::from_fov_degrees(9, 7, 50.0, 40.0).unwrap();
        for j in 0..7 {
            for i in 0..9 {
                let eta = pixel_to_direction(&g, i, j).unwrap();
                assert!((eta.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn direction_rejects_out_of_range() {
        let g = PixelGrid::from_fov_degrees(4, 4, 50.0, 40.0).unwrap();
        assert!(pixel_to_direction(&g, 4, 0).is_err());
        assert!(pixel_to_direction(&g, 0, 9).is_err());
    }

    #[test]
    fn coeffs_at_center() {
        // At z = 0: f₁ = −ω₂, f₂ = ω₁, g₁ = −v₁, g₂ = −v₂.
        let m = MotionSample::new(Vector3::new(0.3, -0.7, 0.9), Vector3::new(0.1, 0.2, 0.4), 0.0);
        let c = motion_coeffs(0.0, 0.0, &m);
        assert_eq!(c.f1, -0.2);
        assert_eq!(c.f2, 0.1);
        assert_eq!(c.g1, -0.3);
        assert_eq!(c.g2, 0.7);
    }

    #[test]
    fn coeffs_pitch_only() {
        let m = MotionSample::new(Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0), 0.0);
        let c = motion_coeffs(0.0, 0.0, &m);
        assert_eq!((c.f1, c.f2, c.g1, c.g2), (-1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn coeffs_forward_motion_off_axis() {
        // z = (1, 1), v = (0, 0, 1): g₁ = g₂ = √3.
        let m = MotionSample::new(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros(), 0.0);
        let c = motion_coeffs(1.0, 1.0, &m);
        let r3 = 3.0_f64.sqrt();
        assert!((c.g1 - r3).abs() < 1e-15);
        assert!((c.g2 - r3).abs() < 1e-15);
        assert_eq!((c.f1, c.f2), (0.0, 0.0));
    }

    #[test]
    fn forward_motion_center_sees_no_translational_flow() {
        let m = MotionSample::new(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros(), 0.0);
        let c = motion_coeffs(0.0, 0.0, &m);
        assert_eq!((c.g1, c.g2), (0.0, 0.0));
    }

    #[test]
    fn flow_is_rotational_at_zero_gamma() {
        let m = MotionSample::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(0.4, 0.5, 0.6), 0.0);
        let c = motion_coeffs(0.2, -0.1, &m);
        let (v1, v2) = predicted_flow(0.2, -0.1, &m, 0.0);
        assert_eq!((v1, v2), (c.f1, c.f2));
    }

    #[test]
    fn flow_center_lateral_translation() {
        // v = (1,0,0), γ = 1/3 at the optical axis: V = (−1/3, 0).
        let m = MotionSample::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros(), 0.0);
        let (v1, v2) = predicted_flow(0.0, 0.0, &m, 1.0 / 3.0);
        assert!((v1 + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v2, 0.0);
    }

    #[test]
    fn flow_vanishes_for_static_camera() {
        let m = still(0.0);
        assert_eq!(predicted_flow(0.3, 0.4, &m, 2.0), (0.0, 0.0));
    }

    #[test]
    fn flow_is_affine_in_gamma() {
        let m = MotionSample::new(Vector3::new(0.7, -0.2, 0.5), Vector3::new(0.1, 0.3, -0.2), 0.0);
        for &(g1, g2) in &[(0.25, 0.5), (0.1, 0.9), (1.5, 2.25)] {
            let a = predicted_flow(0.3, -0.2, &m, g1);
            let b = predicted_flow(0.3, -0.2, &m, g2);
            let zero = predicted_flow(0.3, -0.2, &m, 0.0);
            let sum = predicted_flow(0.3, -0.2, &m, g1 + g2);
            assert!((a.0 + b.0 - zero.0 - sum.0).abs() < 1e-14);
            assert!((a.1 + b.1 - zero.1 - sum.1).abs() < 1e-14);
        }
    }

    #[test]
    fn solid_angle_weight_values() {
        assert_eq!(solid_angle_weight(0.0, 0.0), 1.0);
        assert!((solid_angle_weight(1.0, 1.0) - 3.0_f64.powf(-1.5)).abs() < 1e-15);
        assert!((solid_angle_weight(1.0, 1.0) - 0.19245008972987526).abs() < 1e-15);
    }

    #[test]
    fn solid_angle_weight_decreases_radially() {
        let mut prev = solid_angle_weight(0.0, 0.0);
        for k in 1..20 {
            let r = 0.05 * k as f64;
            let w = solid_angle_weight(r, r);
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn solid_angle_weight_inverse_identity() {
        let g = PixelGrid::from_fov_degrees(11, 9, 50.0, 40.0).unwrap();
        for j in 0..9 {
            for i in 0..11 {
                let (z1, z2) = g.z(i, j);
                let prod = solid_angle_weight(z1, z2) * (1.0 + z1 * z1 + z2 * z2).powf(1.5);
                assert!((prod - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn output_field_translational_vanishes_along_v() {
        // v parallel to η at the center pixel.
        let m = MotionSample::new(Vector3::new(0.0, 0.0, 1.0), Vector3::zeros(), 0.0);
        let (_, g) = output_fields(0.0, 0.0, &m);
        assert_eq!(g, (0.0, 0.0));
    }

    #[test]
    fn output_field_lateral_translation() {
        let m = MotionSample::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros(), 0.0);
        let (f, g) = output_fields(0.0, 0.0, &m);
        assert_eq!(f, (0.0, 0.0));
        assert_eq!(g, (-1.0, 0.0));
        assert_eq!(g.0 * g.0 + g.1 * g.1, 1.0);
    }

    #[test]
    fn output_field_rotational_vanishes_without_rotation() {
        let m = MotionSample::new(Vector3::new(0.3, 0.4, 0.5), Vector3::zeros(), 0.0);
        let (f, _) = output_fields(0.7, -0.3, &m);
        assert_eq!(f, (0.0, 0.0));
    }

    #[test]
    fn excitation_matches_pinhole_norm_at_center() {
        let v = Vector3::new(1.0, 0.0, 0.0);
        assert!((excitation_squared(0.0, 0.0, &v) - 1.0).abs() < 1e-15);
        let fwd = Vector3::new(0.0, 0.0, 1.0);
        assert!(excitation_squared(0.0, 0.0, &fwd).abs() < 1e-15);
    }

    #[test]
    fn pose_constant_velocity_line() {
        let n = 61;
        let dt = 1.0 / 60.0;
        let motions: Vec<_> = (0..n)
            .map(|k| {
                MotionSample::new(
                    Vector3::new(1.0, 0.0, 0.0),
                    Vector3::zeros(),
                    k as f64 * dt,
                )
            })
            .collect();
        let poses = integrate_pose(&motions, dt, Pose::identity()).unwrap();
        assert_eq!(poses.len(), n);
        let last = poses.last().unwrap();
        assert!((last.position - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pose_full_turn_returns_to_identity() {
        // ω = (0, 0, π) for 2 s is a 2π turn; compare against the closed-form
        // exponential of the constant rate.
        let n = 121;
        let dt = 2.0 / (n as f64 - 1.0);
        let motions: Vec<_> = (0..n)
            .map(|k| {
                MotionSample::new(
                    Vector3::zeros(),
                    Vector3::new(0.0, 0.0, PI),
                    k as f64 * dt,
                )
            })
            .collect();
        let poses = integrate_pose(&motions, dt, Pose::identity()).unwrap();
        let exact = UnitQuaternion::from_scaled_axis(Vector3::new(0.0, 0.0, PI) * 2.0);
        let last = poses.last().unwrap().orientation;
        assert!(last.angle_to(&exact) < 1e-6);
        assert!(last.angle_to(&UnitQuaternion::identity()) < 1e-6);
    }

    #[test]
    fn pose_zero_motion_is_fixed() {
        let motions: Vec<_> = (0..5).map(|k| still(k as f64)).collect();
        let poses = integrate_pose(&motions, 1.0, Pose::identity()).unwrap();
        for p in &poses {
            assert_eq!(p.position, Vector3::zeros());
            assert_eq!(p.orientation, UnitQuaternion::identity());
        }
    }

    #[test]
    fn transport_residual_is_rotation_invariant() {
        // Rotating the viewing directions, the angular velocity and the
        // linear velocity together by 90° about the optical axis permutes
        // the transport field V·∇y without changing its values. On a square
        // grid the permutation is exact, so the discrete fields (including
        // the Sobel derivatives) must match to rounding noise.
        use crate::flow::spatial_derivatives;
        use crate::grid::ScalarGrid;

        let n = 33;
        let g = PixelGrid::new(n, n, 0.4, 0.4).unwrap();
        let m = MotionSample::new(Vector3::new(0.7, -0.4, 0.2), Vector3::new(0.1, 0.3, -0.2), 0.0);
        // smooth analytic brightness and inverse depth
        let brightness = |z1: f64, z2: f64| 120.0 + 60.0 * (3.0 * z1).sin() * (4.0 * z2).cos();
        let gamma_at = |z1: f64, z2: f64| 0.3 + 0.05 * (z1 + 0.5 * z2);

        let transport = |m: &MotionSample, y: &ScalarGrid, gamma: &ScalarGrid| -> ScalarGrid {
            let stack = spatial_derivatives(y, y, &g, 1.0, 0).unwrap();
            ScalarGrid::from_fn(n, n, |i, j| {
                let (z1, z2) = g.z(i, j);
                let (v1, v2) = predicted_flow(z1, z2, m, gamma.at(i, j));
                v1 * stack.yz1.at(i, j) + v2 * stack.yz2.at(i, j)
            })
        };

        let y0 = ScalarGrid::from_fn(n, n, |i, j| {
            let (z1, z2) = g.z(i, j);
            brightness(z1, z2)
        });
        let g0 = ScalarGrid::from_fn(n, n, |i, j| {
            let (z1, z2) = g.z(i, j);
            gamma_at(z1, z2)
        });
        let base = transport(&m, &y0, &g0);

        // rotate: (z1, z2) -> (-z2, z1), pixel (i, j) -> (n-1-j, i)
        let rotate = |f: &ScalarGrid| -> ScalarGrid {
            ScalarGrid::from_fn(n, n, |i, j| {
                // inverse permutation: source pixel of destination (i, j)
                let src_i = j;
                let src_j = n - 1 - i;
                f.at(src_i, src_j)
            })
        };
        let m_rot = MotionSample::new(
            Vector3::new(-m.v.y, m.v.x, m.v.z),
            Vector3::new(-m.omega.y, m.omega.x, m.omega.z),
            0.0,
        );
        let rotated = transport(&m_rot, &rotate(&y0), &rotate(&g0));
        let expected = rotate(&base);
        let mut worst = 0.0_f64;
        for idx in 0..n * n {
            worst = worst.max((rotated.values()[idx] - expected.values()[idx]).abs());
        }
        assert!(worst < 1e-10, "rotation residual mismatch {worst:.2e}");
    }

    #[test]
    fn pose_quaternions_stay_normalized() {
        let dt = 0.01;
        let motions: Vec<_> = (0..500)
            .map(|k| {
                let t = k as f64 * dt;
                MotionSample::new(
                    Vector3::new(t.sin(), t.cos(), 0.1),
                    Vector3::new(0.5, -0.3, 0.8),
                    t,
                )
            })
            .collect();
        let poses = integrate_pose(&motions, dt, Pose::identity()).unwrap();
        for p in &poses {
            assert!((p.orientation.into_inner().norm() - 1.0).abs() < 1e-9);
        }
    }
}
