//! Experiment configuration: a flat, line-oriented `key = value` format with
//! `#` comments, plus the named presets the experiments run from. Unknown
//! keys are rejected with their line number; the resolved configuration
//! echoes back in a canonical form suitable for golden tests.

use crate::error::{Error, Result};
use crate::geometry::PixelGrid;
use crate::observer::{ObserverConfig, RunConfig};
use crate::scene::{SceneModel, TextureSpec, TiltAxis, TrajectorySpec};
use crate::vardepth::VarConfig;
use nalgebra::Vector3;

/// Which estimation pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    FlowObserver,
    GammaObserver,
    VariationalOnly,
    HsFlowOnly,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::FlowObserver => "flow-observer",
            Mode::GammaObserver => "gamma-observer",
            Mode::VariationalOnly => "variational-only",
            Mode::HsFlowOnly => "hs-flow-only",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "flow-observer" => Some(Mode::FlowObserver),
            "gamma-observer" => Some(Mode::GammaObserver),
            "variational-only" => Some(Mode::VariationalOnly),
            "hs-flow-only" => Some(Mode::HsFlowOnly),
            _ => None,
        }
    }
}

/// Where the observer's flow input comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSource {
    Internal,
    External,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub width: usize,
    pub height: usize,
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub fps: f64,
    pub frames: usize,
    pub amp1: f64,
    pub amp2: f64,
    pub puls1: f64,
    pub puls2: f64,
    pub plane_distance: f64,
    pub tilt: f64,
    pub tilt_axis: TiltAxis,
    pub extent_u: f64,
    pub extent_w: f64,
    pub strict_extent: bool,
    pub supersample: bool,
    pub tex_base: f64,
    pub tex_amplitude: f64,
    pub tex_period_u: f64,
    pub tex_period_w: f64,
    pub sigma: f64,
    pub seed: u64,
    pub mode: Mode,
    pub flow_source: FlowSource,
    pub normalize_intensity: bool,
    pub k_flow: f64,
    pub k_gamma: f64,
    pub alpha_hs: f64,
    pub alpha_var: f64,
    pub derivative_presmooth: usize,
    pub hs_iters: usize,
    pub var_iters: usize,
    pub init_depth: f64,
    pub gamma_init: f64,
    pub small_angle: bool,
    pub warm_start: bool,
    pub substeps: usize,
    pub max_substeps: usize,
}

impl Default for ExperimentConfig {
    /// The `desk` preset: the reference physics at a resolution small enough
    /// for fast iteration and CI.
    fn default() -> Self {
        ExperimentConfig {
            width: 160,
            height: 120,
            fov_h_deg: 50.0,
            fov_v_deg: 40.0,
            fps: 60.0,
            frames: 120,
            amp1: 1.0,
            amp2: 1.0,
            puls1: std::f64::consts::PI,
            puls2: 3.0 * std::f64::consts::PI,
            plane_distance: 3.0,
            tilt: 0.3,
            tilt_axis: TiltAxis::Z1,
            extent_u: 2.0,
            extent_w: 2.0,
            strict_extent: false,
            supersample: false,
            tex_base: 128.0,
            tex_amplitude: 100.0,
            tex_period_u: 0.5,
            tex_period_w: 0.5,
            sigma: 1.0,
            seed: 1,
            mode: Mode::GammaObserver,
            flow_source: FlowSource::Internal,
            normalize_intensity: false,
            k_flow: 500.0,
            k_gamma: 50.0,
            alpha_hs: 2000.0,
            alpha_var: 300.0,
            derivative_presmooth: 0,
            hs_iters: 100,
            var_iters: 200,
            init_depth: 5.0,
            gamma_init: 0.2,
            small_angle: true,
            warm_start: true,
            substeps: 1,
            max_substeps: 4096,
        }
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let desk = ExperimentConfig::default();
        match name {
            "desk" => Ok(desk),
            "paper-sigma1" => Ok(ExperimentConfig {
                width: 640,
                height: 480,
                sigma: 1.0,
                k_flow: 500.0,
                k_gamma: 50.0,
                alpha_var: 300.0,
                ..desk
            }),
            "paper-sigma1-k100" => Ok(ExperimentConfig {
                width: 640,
                height: 480,
                sigma: 1.0,
                k_flow: 100.0,
                k_gamma: 50.0,
                alpha_var: 300.0,
                ..desk
            }),
            "paper-sigma20" => Ok(ExperimentConfig {
                width: 640,
                height: 480,
                sigma: 20.0,
                k_flow: 50.0,
                k_gamma: 50.0,
                alpha_var: 1000.0,
                derivative_presmooth: 2,
                ..desk
            }),
            other => Err(Error::Invalid(format!(
                "unknown preset `{other}` (expected desk, paper-sigma1, paper-sigma1-k100 or paper-sigma20)"
            ))),
        }
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            self.apply_kv(key, value).map_err(|message| Error::Config {
                line: line_no,
                message,
            })?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn f(value: &str) -> std::result::Result<f64, String> {
            let v: f64 = value
                .parse()
                .map_err(|_| format!("`{value}` is not a number"))?;
            if !v.is_finite() {
                return Err(format!("`{value}` is not finite"));
            }
            Ok(v)
        }
        fn n(value: &str) -> std::result::Result<usize, String> {
            value.parse().map_err(|_| format!("`{value}` is not a count"))
        }
        fn b(value: &str) -> std::result::Result<bool, String> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("`{value}` is not true/false")),
            }
        }
        match key {
            "width" => self.width = n(value)?,
            "height" => self.height = n(value)?,
            "fov_h_deg" => self.fov_h_deg = f(value)?,
            "fov_v_deg" => self.fov_v_deg = f(value)?,
            "fps" => self.fps = f(value)?,
            "frames" => self.frames = n(value)?,
            "amp1" => self.amp1 = f(value)?,
            "amp2" => self.amp2 = f(value)?,
            "puls1" => self.puls1 = f(value)?,
            "puls2" => self.puls2 = f(value)?,
            "plane_distance" => self.plane_distance = f(value)?,
            "tilt" => self.tilt = f(value)?,
            "tilt_axis" => {
                self.tilt_axis = match value {
                    "z1" => TiltAxis::Z1,
                    "z2" => TiltAxis::Z2,
                    _ => return Err(format!("`{value}` is not z1/z2")),
                }
            }
            "extent_u" => self.extent_u = f(value)?,
            "extent_w" => self.extent_w = f(value)?,
            "strict_extent" => self.strict_extent = b(value)?,
            "supersample" => self.supersample = b(value)?,
            "tex_base" => self.tex_base = f(value)?,
            "tex_amplitude" => self.tex_amplitude = f(value)?,
            "tex_period_u" => self.tex_period_u = f(value)?,
            "tex_period_w" => self.tex_period_w = f(value)?,
            "sigma" => self.sigma = f(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| format!("`{value}` is not a seed"))?
            }
            "mode" => {
                self.mode =
                    Mode::parse(value).ok_or_else(|| format!("`{value}` is not a mode"))?
            }
            "flow_source" => {
                self.flow_source = match value {
                    "internal" => FlowSource::Internal,
                    "external" => FlowSource::External,
                    _ => return Err(format!("`{value}` is not internal/external")),
                }
            }
            "k_flow" => self.k_flow = f(value)?,
            "k_gamma" => self.k_gamma = f(value)?,
            "alpha_hs" => self.alpha_hs = f(value)?,
            "derivative_presmooth" => self.derivative_presmooth = n(value)?,
            "alpha_var" => self.alpha_var = f(value)?,
            "hs_iters" => self.hs_iters = n(value)?,
            "var_iters" => self.var_iters = n(value)?,
            "init_depth" => self.init_depth = f(value)?,
            "gamma_init" => self.gamma_init = f(value)?,
            "small_angle" => self.small_angle = b(value)?,
            "warm_start" => self.warm_start = b(value)?,
            "normalize_intensity" => self.normalize_intensity = b(value)?,
            "substeps" => self.substeps = n(value)?,
            "max_substeps" => self.max_substeps = n(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Canonical echo of the resolved configuration; parsing it back yields
    /// the same configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("alpha_hs", format!("{}", self.alpha_hs));
        kv("alpha_var", format!("{}", self.alpha_var));
        kv("amp1", format!("{}", self.amp1));
        kv("amp2", format!("{}", self.amp2));
        kv("derivative_presmooth", format!("{}", self.derivative_presmooth));
        kv("extent_u", format!("{}", self.extent_u));
        kv("extent_w", format!("{}", self.extent_w));
        kv("flow_source", match self.flow_source {
            FlowSource::Internal => "internal".into(),
            FlowSource::External => "external".into(),
        });
        kv("fov_h_deg", format!("{}", self.fov_h_deg));
        kv("fov_v_deg", format!("{}", self.fov_v_deg));
        kv("fps", format!("{}", self.fps));
        kv("frames", format!("{}", self.frames));
        kv("gamma_init", format!("{}", self.gamma_init));
        kv("height", format!("{}", self.height));
        kv("hs_iters", format!("{}", self.hs_iters));
        kv("init_depth", format!("{}", self.init_depth));
        kv("k_flow", format!("{}", self.k_flow));
        kv("k_gamma", format!("{}", self.k_gamma));
        kv("max_substeps", format!("{}", self.max_substeps));
        kv("mode", self.mode.name().into());
        kv("normalize_intensity", format!("{}", self.normalize_intensity));
        kv("plane_distance", format!("{}", self.plane_distance));
        kv("puls1", format!("{}", self.puls1));
        kv("puls2", format!("{}", self.puls2));
        kv("seed", format!("{}", self.seed));
        kv("sigma", format!("{}", self.sigma));
        kv("small_angle", format!("{}", self.small_angle));
        kv("strict_extent", format!("{}", self.strict_extent));
        kv("substeps", format!("{}", self.substeps));
        kv("supersample", format!("{}", self.supersample));
        kv("tex_amplitude", format!("{}", self.tex_amplitude));
        kv("tex_base", format!("{}", self.tex_base));
        kv("tex_period_u", format!("{}", self.tex_period_u));
        kv("tex_period_w", format!("{}", self.tex_period_w));
        kv("tilt", format!("{}", self.tilt));
        kv("tilt_axis", match self.tilt_axis {
            TiltAxis::Z1 => "z1".into(),
            TiltAxis::Z2 => "z2".into(),
        });
        kv("var_iters", format!("{}", self.var_iters));
        kv("warm_start", format!("{}", self.warm_start));
        kv("width", format!("{}", self.width));
        out
    }

    pub fn grid(&self) -> Result<PixelGrid> {
        PixelGrid::from_fov_degrees(self.width, self.height, self.fov_h_deg, self.fov_v_deg)
    }

    pub fn scene(&self) -> SceneModel {
        SceneModel {
            plane_point: Vector3::new(0.0, 0.0, self.plane_distance),
            tilt: self.tilt,
            tilt_axis: self.tilt_axis,
            extent_u: self.extent_u,
            extent_w: self.extent_w,
            strict_extent: self.strict_extent,
            supersample: self.supersample,
            texture: TextureSpec {
                base: self.tex_base,
                amplitude: self.tex_amplitude,
                period_u: self.tex_period_u,
                period_w: self.tex_period_w,
            },
        }
    }

    pub fn trajectory(&self) -> TrajectorySpec {
        TrajectorySpec {
            amp1: self.amp1,
            amp2: self.amp2,
            puls1: self.puls1,
            puls2: self.puls2,
            fps: self.fps,
            n_frames: self.frames,
        }
    }

    pub fn run_config(&self) -> RunConfig {
        let k = match self.mode {
            Mode::FlowObserver | Mode::HsFlowOnly => self.k_flow,
            Mode::GammaObserver | Mode::VariationalOnly => self.k_gamma,
        };
        RunConfig {
            observer: ObserverConfig {
                k,
                dt: 1.0 / self.fps,
                substeps: self.substeps,
                init_depth: self.init_depth,
                max_substeps: self.max_substeps,
            },
            hs_alpha: self.alpha_hs,
            hs_iterations: self.hs_iters,
            var: VarConfig {
                alpha: self.alpha_var,
                iterations: self.var_iters,
                small_angle: self.small_angle,
                clamp_min: 0.0,
                warm_start: self.warm_start,
            },
            gamma_init: self.gamma_init,
            presmooth: self.derivative_presmooth,
            normalize_intensity: self.normalize_intensity,
            metrics: true,
        }
    }
}
