//! Synthetic test scenes: a tilted textured plane observed by a camera on a
//! sinusoidal translation trajectory, rendered with optional Gaussian pixel
//! noise, together with ray-traced ground-truth depth.

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{
    direction_from_z, integrate_pose, MotionSample, PixelGrid, Pose,
};
use crate::grid::{BrightnessField, DepthField, ScalarGrid};

/// Sinusoidal gray pattern painted on the plane, evaluated in the in-plane
/// coordinates (u, w) of the ray hit point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureSpec {
    pub base: f64,
    pub amplitude: f64,
    pub period_u: f64,
    pub period_w: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        TextureSpec {
            base: 128.0,
            amplitude: 100.0,
            period_u: 0.5,
            period_w: 0.5,
        }
    }
}

impl TextureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.base - self.amplitude >= 1.0 && self.base + self.amplitude <= 256.0) {
            return Err(Error::Invalid(format!(
                "texture range [{}, {}] must stay within [1, 256]",
                self.base - self.amplitude,
                self.base + self.amplitude
            )));
        }
        if self.period_u <= 0.0 || self.period_w <= 0.0 {
            return Err(Error::Invalid("texture periods must be positive".into()));
        }
        Ok(())
    }

    /// Pattern intensity before quantization.
    #[inline]
    pub fn eval(&self, u: f64, w: f64) -> f64 {
        use std::f64::consts::TAU;
        self.base
            + self.amplitude * (TAU * u / self.period_u).sin() * (TAU * w / self.period_w).sin()
    }
}

/// Axis the plane is tilted about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltAxis {
    Z1,
    Z2,
}

/// Textured plane in the reference frame (the camera frame at t = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneModel {
    /// A point on the plane; the untilted plane is frontoparallel through it.
    pub plane_point: Vector3<f64>,
    /// Tilt of the plane normal away from the optical axis, radians.
    pub tilt: f64,
    pub tilt_axis: TiltAxis,
    /// Physical extent of the painted plate, meters. Only enforced when
    /// `strict_extent` is set; the plane is otherwise treated as infinite.
    pub extent_u: f64,
    pub extent_w: f64,
    pub strict_extent: bool,
    /// Average 2x2 subsamples per pixel instead of one center ray.
    pub supersample: bool,
    pub texture: TextureSpec,
}

impl Default for SceneModel {
    fn default() -> Self {
        SceneModel {
            plane_point: Vector3::new(0.0, 0.0, 3.0),
            tilt: 0.3,
            tilt_axis: TiltAxis::Z1,
            extent_u: 2.0,
            extent_w: 2.0,
            strict_extent: false,
            supersample: false,
            texture: TextureSpec::default(),
        }
    }
}

/// Orthonormal plane frame: two in-plane texture axes and the normal.
#[derive(Debug, Clone, Copy)]
pub struct PlaneFrame {
    pub origin: Vector3<f64>,
    pub u_axis: Vector3<f64>,
    pub w_axis: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl SceneModel {
    pub fn frame(&self) -> PlaneFrame {
        let (s, c) = self.tilt.sin_cos();
        let (u_axis, w_axis, normal) = match self.tilt_axis {
            // rotation about the horizontal image axis
            TiltAxis::Z1 => (
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, c, s),
                Vector3::new(0.0, -s, c),
            ),
            // rotation about the vertical image axis
            TiltAxis::Z2 => (
                Vector3::new(c, 0.0, -s),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(s, 0.0, c),
            ),
        };
        PlaneFrame {
            origin: self.plane_point,
            u_axis,
            w_axis,
            normal,
        }
    }
}

/// Ray-plane intersection: range along the unit ray plus in-plane hit
/// coordinates. `None` when the ray is parallel to the plane or the hit is
/// behind the camera.
fn intersect(frame: &PlaneFrame, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64, f64)> {
    let denom = dir.dot(&frame.normal);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = (frame.origin - origin).dot(&frame.normal) / denom;
    if t <= 0.0 {
        return None;
    }
    let hit = origin + dir * t;
    let rel = hit - frame.origin;
    Some((t, rel.dot(&frame.u_axis), rel.dot(&frame.w_axis)))
}

/// Distance from the camera center to the plane along the ray of pixel (i, j).
pub fn plane_depth(
    pose: &Pose,
    grid: &PixelGrid,
    scene: &SceneModel,
    i: usize,
    j: usize,
) -> Result<f64> {
    let frame = scene.frame();
    let (z1, z2) = grid.z(i, j);
    let dir = pose.orientation * direction_from_z(z1, z2);
    match intersect(&frame, &pose.position, &dir) {
        Some((t, _, _)) => Ok(t),
        None => Err(Error::Invalid(format!(
            "ray through pixel ({i}, {j}) does not hit the plane at positive range"
        ))),
    }
}

/// Camera translation profile: sinusoidal velocities in the image plane,
/// v₁ = amp1·sin(puls1·t), v₂ = amp2·sin(puls2·t), v₃ = ω = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub amp1: f64,
    pub amp2: f64,
    pub puls1: f64,
    pub puls2: f64,
    pub fps: f64,
    pub n_frames: usize,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            amp1: 1.0,
            amp2: 1.0,
            puls1: std::f64::consts::PI,
            puls2: 3.0 * std::f64::consts::PI,
            fps: 60.0,
            n_frames: 120,
        }
    }
}

impl TrajectorySpec {
    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        Vector3::new(
            self.amp1 * (self.puls1 * t).sin(),
            self.amp2 * (self.puls2 * t).sin(),
            0.0,
        )
    }

    /// Closed-form camera position for this pure-translation profile,
    /// C(t) = (amp1/puls1·(1−cos puls1 t), amp2/puls2·(1−cos puls2 t), 0).
    pub fn position_exact(&self, t: f64) -> Vector3<f64> {
        Vector3::new(
            self.amp1 / self.puls1 * (1.0 - (self.puls1 * t).cos()),
            self.amp2 / self.puls2 * (1.0 - (self.puls2 * t).cos()),
            0.0,
        )
    }
}

/// Samples the velocity profile at the frame instants and integrates poses.
pub fn make_trajectory(spec: &TrajectorySpec) -> Result<(Vec<MotionSample>, Vec<Pose>)> {
    if spec.fps <= 0.0 {
        return Err(Error::Invalid("fps must be positive".into()));
    }
    if spec.n_frames < 2 {
        return Err(Error::Invalid("need at least 2 frames".into()));
    }
    let dt = spec.dt();
    let motions: Vec<MotionSample> = (0..spec.n_frames)
        .map(|k| {
            let t = k as f64 * dt;
            MotionSample::new(spec.velocity(t), Vector3::zeros(), t)
        })
        .collect();
    let poses = integrate_pose(&motions, dt, Pose::identity())?;
    Ok((motions, poses))
}

/// splitmix64 step, used to derive independent noise substreams.
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn substream(seed: u64, a: u64, b: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix64(seed ^ mix64(a ^ mix64(b))))
}

/// Renders one frame: each pixel ray is intersected with the plane, the
/// texture is evaluated at the hit point, quantized to an integer in
/// [1, 256], and Gaussian noise of standard deviation `sigma` is added.
/// Rows use independent, deterministically derived noise substreams, so the
/// row-parallel render is bit-identical to a serial one.
pub fn render_frame(
    pose: &Pose,
    grid: &PixelGrid,
    scene: &SceneModel,
    sigma: f64,
    noise_seed: u64,
) -> Result<BrightnessField> {
    scene.texture.validate()?;
    if sigma < 0.0 {
        return Err(Error::Invalid("noise sigma must be nonnegative".into()));
    }
    let frame = scene.frame();
    let (w, h) = grid.dims();
    let normal = if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).map_err(|e| Error::Invalid(e.to_string()))?)
    } else {
        None
    };

    let shade = |z1: f64, z2: f64| -> Result<f64> {
        let dir = pose.orientation * direction_from_z(z1, z2);
        let (_, u, wv) = intersect(&frame, &pose.position, &dir).ok_or_else(|| {
            Error::Invalid("plane not visible on every pixel".into())
        })?;
        if scene.strict_extent
            && (u.abs() > scene.extent_u / 2.0 || wv.abs() > scene.extent_w / 2.0)
        {
            return Err(Error::Invalid(format!(
                "ray hits outside the {}x{} m plate at (u, w) = ({u:.3}, {wv:.3})",
                scene.extent_u, scene.extent_w
            )));
        }
        Ok(scene.texture.eval(u, wv))
    };

    // Quantization happens before the noise is added, so noisy frames hold
    // non-integer reals around integer levels.
    let quantize = |v: f64| v.round().clamp(1.0, 256.0);

    use rayon::prelude::*;
    let results: Vec<Result<Vec<f64>>> = (0..h)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(noise_seed, j as u64, 0x726f77);
            let mut row = vec![0.0; w];
            for (i, out) in row.iter_mut().enumerate() {
                let (z1, z2) = grid.z(i, j);
                let raw = if scene.supersample {
                    let q1 = grid.dz1() / 4.0;
                    let q2 = grid.dz2() / 4.0;
                    let mut acc = 0.0;
                    for (o1, o2) in [(-q1, -q2), (q1, -q2), (-q1, q2), (q1, q2)] {
                        acc += shade(z1 + o1, z2 + o2)?;
                    }
                    acc / 4.0
                } else {
                    shade(z1, z2)?
                };
                let mut value = quantize(raw);
                if let Some(n) = &normal {
                    value += n.sample(&mut rng);
                }
                *out = value;
            }
            Ok(row)
        })
        .collect();
    let mut field = ScalarGrid::zeros(w, h);
    for (j, r) in results.into_iter().enumerate() {
        let r = r?;
        for (i, v) in r.into_iter().enumerate() {
            field.set(i, j, v);
        }
    }
    Ok(field)
}

/// Ray-traced ground-truth depth for one pose.
pub fn truth_depth_field(pose: &Pose, grid: &PixelGrid, scene: &SceneModel) -> Result<DepthField> {
    let frame = scene.frame();
    let (w, h) = grid.dims();
    let mut field = ScalarGrid::zeros(w, h);
    for j in 0..h {
        for i in 0..w {
            let (z1, z2) = grid.z(i, j);
            let dir = pose.orientation * direction_from_z(z1, z2);
            let (t, _, _) = intersect(&frame, &pose.position, &dir).ok_or_else(|| {
                Error::Invalid(format!(
                    "ray through pixel ({i}, {j}) misses the plane"
                ))
            })?;
            field.set(i, j, t);
        }
    }
    Ok(DepthField { values: field })
}

/// A full synthetic dataset: rendered frames, ground truth, and the motion
/// that produced them.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub frames: Vec<BrightnessField>,
    pub truth_depth: Vec<DepthField>,
    pub motions: Vec<MotionSample>,
    pub poses: Vec<Pose>,
    pub grid: PixelGrid,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl SyntheticSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.motions.len() >= 2 {
            self.motions[1].t - self.motions[0].t
        } else {
            0.0
        }
    }
}

/// Renders the whole sequence along the trajectory; frame k uses the pose at
/// t = k/fps and the noise substream derived from (seed, k).
pub fn generate_sequence(
    grid: &PixelGrid,
    scene: &SceneModel,
    trajectory: &TrajectorySpec,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticSequence> {
    let (motions, poses) = make_trajectory(trajectory)?;
    let mut frames = Vec::with_capacity(poses.len());
    let mut truth = Vec::with_capacity(poses.len());
    for (k, pose) in poses.iter().enumerate() {
        let frame_seed = mix64(seed ^ mix64(k as u64));
        frames.push(render_frame(pose, grid, scene, sigma, frame_seed)?);
        let depth = truth_depth_field(pose, grid, scene)?;
        if depth.values.values().iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Invalid(format!("nonpositive truth depth at frame {k}")));
        }
        truth.push(depth);
    }
    Ok(SyntheticSequence {
        frames,
        truth_depth: truth,
        motions,
        poses,
        grid: *grid,
        noise_sigma: sigma,
        rng_seed: seed,
    })
}
