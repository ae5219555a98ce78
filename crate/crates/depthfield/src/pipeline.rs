//! End-to-end commands behind the CLI: dataset synthesis, flow estimation,
//! depth estimation and evaluation. All outputs are deterministic for a
//! fixed configuration and seed.

use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, FlowSource, Mode};
use crate::error::{Error, Result};
use crate::flow::{horn_schunck, spatial_derivatives, FlowField, HsConfig};
use crate::geometry::{predicted_flow, MotionSample, PixelGrid};
use crate::grid::{BrightnessField, DepthField, ScalarGrid};
use crate::io::{
    read_fgrid, read_motion_csv, read_pgm, write_fgrid, write_motion_csv, write_pgm,
};
use crate::metrics::{global_error, linf_error, lp_error, write_curve_csv, write_table_csv};
use crate::observer::{run_observer, ObserverInput, RunMode};
use crate::scene::generate_sequence;

/// Intensity values are stored as 16-bit PGM scaled by this factor, keeping
/// the sub-integer noise. Samples are clamped into the representable range
/// on export.
pub const FRAME_SCALE: f64 = 256.0;

fn frame_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("frame_{k:06}.pgm"))
}

fn truth_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("truth_depth_{k:06}.fgrid"))
}

fn dhat_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("dhat_{k:06}.fgrid"))
}

fn gamma_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("gamma_hs_{k:06}.fgrid"))
}

fn flow_paths(dir: &Path, k: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("flow_v1_{k:06}.fgrid")),
        dir.join(format!("flow_v2_{k:06}.fgrid")),
    )
}

/// Renders the configured synthetic sequence into `out`: frames as 16-bit
/// PGM, ground truth as FGRID, the motion log as CSV, and an echo of the
/// resolved configuration.
pub fn cmd_synth(config: &ExperimentConfig, out: &Path) -> Result<usize> {
    let grid = config.grid()?;
    let seq = generate_sequence(
        &grid,
        &config.scene(),
        &config.trajectory(),
        config.sigma,
        config.seed,
    )?;
    std::fs::create_dir_all(out).map_err(|e| Error::io_at(out, e))?;
    std::fs::write(out.join("config.txt"), config.echo())
        .map_err(|e| Error::io_at(out.join("config.txt"), e))?;
    let max_value = 65535.0 / FRAME_SCALE;
    for (k, frame) in seq.frames.iter().enumerate() {
        let clamped = frame.map(|v| v.clamp(0.0, max_value));
        write_pgm(&frame_path(out, k), &clamped, FRAME_SCALE)?;
        write_fgrid(&truth_path(out, k), &seq.truth_depth[k].values)?;
    }
    write_motion_csv(&out.join("motion.csv"), &seq.motions)?;
    Ok(seq.frames.len())
}

/// A dataset loaded back from disk.
pub struct Dataset {
    pub config: ExperimentConfig,
    pub grid: PixelGrid,
    pub frames: Vec<BrightnessField>,
    pub motions: Vec<MotionSample>,
    pub truth: Option<Vec<DepthField>>,
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let config_text = std::fs::read_to_string(dir.join("config.txt"))
        .map_err(|e| Error::io_at(dir.join("config.txt"), e))?;
    let mut config = ExperimentConfig::default();
    config.apply_text(&config_text)?;
    let grid = config.grid()?;

    let mut frames = Vec::new();
    let mut truth = Vec::new();
    let mut have_truth = true;
    for k in 0.. {
        let fp = frame_path(dir, k);
        if !fp.exists() {
            break;
        }
        let img = read_pgm(&fp)?;
        if img.samples.dims() != grid.dims() {
            return Err(Error::DimensionMismatch {
                expected: grid.dims(),
                got: img.samples.dims(),
            });
        }
        frames.push(img.unscaled(FRAME_SCALE));
        let tp = truth_path(dir, k);
        if tp.exists() && have_truth {
            truth.push(DepthField {
                values: read_fgrid(&tp)?,
            });
        } else {
            have_truth = false;
        }
    }
    if frames.is_empty() {
        return Err(Error::Invalid(format!(
            "no frames found under {}",
            dir.display()
        )));
    }
    let motions = read_motion_csv(&dir.join("motion.csv"))?;
    if motions.len() != frames.len() {
        return Err(Error::Invalid(format!(
            "{} frames but {} motion rows",
            frames.len(),
            motions.len()
        )));
    }
    Ok(Dataset {
        config,
        grid,
        frames,
        motions,
        truth: if have_truth && !truth.is_empty() {
            Some(truth)
        } else {
            None
        },
    })
}

fn dataset_dt(ds: &Dataset) -> f64 {
    if ds.motions.len() >= 2 {
        ds.motions[1].t - ds.motions[0].t
    } else {
        1.0 / ds.config.fps
    }
}

/// Horn-Schunck flow for every frame pair, written as FGRID pairs; when the
/// dataset carries ground truth, a per-frame flow-error curve against the
/// analytic flow goes alongside.
pub fn cmd_flow(dataset: &Path, config: &ExperimentConfig, out: &Path) -> Result<usize> {
    let ds = load_dataset(dataset)?;
    let dt = dataset_dt(&ds);
    std::fs::create_dir_all(out).map_err(|e| Error::io_at(out, e))?;
    let mut prev: Option<FlowField> = None;
    let mut error_rows: Vec<Vec<f64>> = Vec::new();
    for k in 0..ds.frames.len() - 1 {
        let stack = spatial_derivatives(&ds.frames[k], &ds.frames[k + 1], &ds.grid, dt, config.derivative_presmooth)?;
        let cfg = HsConfig {
            alpha: config.alpha_hs,
            iterations: config.hs_iters,
            init: prev.take(),
        };
        let flow = horn_schunck(&stack, &cfg)?;
        let (p1, p2) = flow_paths(out, k);
        write_fgrid(&p1, &flow.v1)?;
        write_fgrid(&p2, &flow.v2)?;
        if let Some(truth) = &ds.truth {
            let m = MotionSample::midpoint(&ds.motions[k], &ds.motions[k + 1]);
            let (median_rel, median_speed) =
                flow_error_stats(&flow, &truth[k].values, &truth[k + 1].values, &m, &ds.grid);
            error_rows.push(vec![k as f64, ds.motions[k].t, median_rel, median_speed]);
        }
        prev = Some(flow);
    }
    if !error_rows.is_empty() {
        write_table_csv(
            &out.join("flow_errors.csv"),
            "pair,t,median_rel_err,median_speed",
            &error_rows,
        )?;
    }
    Ok(ds.frames.len() - 1)
}

/// Median relative endpoint error of a flow field against the analytic flow
/// from ground-truth inverse depth, over the interior (a 2-pixel border band
/// is excluded), plus the median measured speed.
pub fn flow_error_stats(
    flow: &FlowField,
    truth_a: &ScalarGrid,
    truth_b: &ScalarGrid,
    m: &MotionSample,
    grid: &PixelGrid,
) -> (f64, f64) {
    let (w, h) = grid.dims();
    let mut rels = Vec::new();
    let mut speeds = Vec::new();
    let margin = 2usize;
    for j in 0..h {
        for i in 0..w {
            let speed = flow.v1.at(i, j).hypot(flow.v2.at(i, j));
            speeds.push(speed);
            if i < margin || j < margin || i + margin >= w || j + margin >= h {
                continue;
            }
            let (z1, z2) = grid.z(i, j);
            let gamma = 0.5 * (1.0 / truth_a.at(i, j) + 1.0 / truth_b.at(i, j));
            let (tv1, tv2) = predicted_flow(z1, z2, m, gamma);
            let mag = tv1.hypot(tv2);
            if mag > 1e-12 {
                let err = (flow.v1.at(i, j) - tv1).hypot(flow.v2.at(i, j) - tv2);
                rels.push(err / mag);
            }
        }
    }
    let med = |v: &mut Vec<f64>| -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    (med(&mut rels), med(&mut speeds))
}

/// Runs the configured estimation pipeline over a dataset directory and
/// writes per-frame depth (and inverse-depth) fields plus the error curve.
pub fn cmd_estimate(dataset: &Path, config: &ExperimentConfig, out: &Path) -> Result<()> {
    if config.mode == Mode::HsFlowOnly {
        return Err(Error::Invalid(
            "mode hs-flow-only belongs to the flow command".into(),
        ));
    }
    let ds = load_dataset(dataset)?;
    let dt = dataset_dt(&ds);
    let mode = match (config.mode, config.flow_source) {
        (Mode::FlowObserver, FlowSource::Internal) => RunMode::FlowObserver {
            external_flow: None,
        },
        (Mode::FlowObserver, FlowSource::External) => {
            let mut flows = Vec::new();
            for k in 0..ds.frames.len() - 1 {
                let (p1, p2) = flow_paths(dataset, k);
                if !p1.exists() || !p2.exists() {
                    return Err(Error::Invalid(format!(
                        "external flow requested but {} is missing",
                        p1.display()
                    )));
                }
                let v1 = read_fgrid(&p1)?;
                let v2 = read_fgrid(&p2)?;
                flows.push(FlowField { v1, v2 });
            }
            RunMode::FlowObserver {
                external_flow: Some(flows),
            }
        }
        (Mode::GammaObserver, _) => RunMode::GammaObserver,
        (Mode::VariationalOnly, _) => RunMode::VariationalOnly,
        (Mode::HsFlowOnly, _) => unreachable!(),
    };
    let mut run_cfg = config.run_config();
    run_cfg.observer.dt = dt;
    run_cfg.metrics = ds.truth.is_some();
    let input = ObserverInput {
        frames: ds.frames.clone(),
        motions: ds.motions.clone(),
        grid: ds.grid,
        truth: ds.truth.clone(),
        dt,
    };
    let run = run_observer(&input, &mode, &run_cfg)?;

    std::fs::create_dir_all(out).map_err(|e| Error::io_at(out, e))?;
    std::fs::write(out.join("config.txt"), config.echo())
        .map_err(|e| Error::io_at(out.join("config.txt"), e))?;
    for (offset, d) in run.estimates.iter().enumerate() {
        write_fgrid(&dhat_path(out, run.first_frame + offset), &d.values)?;
    }
    for (k, g) in run.gammas.iter().enumerate() {
        write_fgrid(&gamma_path(out, k + 1), &g.values)?;
    }
    if !run.reports.is_empty() {
        write_curve_csv(&out.join("errors.csv"), &run.reports)?;
    }
    Ok(())
}

/// One evaluated frame of `cmd_eval`.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub frame: usize,
    pub global: f64,
    pub linf: f64,
    pub l1: f64,
    pub l2: f64,
}

/// Evaluation result: per-frame rows plus the final global error.
#[derive(Debug, Clone)]
pub struct EvalSummary {
    pub rows: Vec<EvalRow>,
    pub final_global: f64,
    pub pass: bool,
}

/// Compares estimated depth fields against ground truth, writes `eval.csv`
/// into the estimates directory and checks the final global error against an
/// optional threshold.
pub fn cmd_eval(estimates: &Path, truth_dir: &Path, threshold: Option<f64>) -> Result<EvalSummary> {
    let config_text = std::fs::read_to_string(truth_dir.join("config.txt"))
        .map_err(|e| Error::io_at(truth_dir.join("config.txt"), e))?;
    let mut config = ExperimentConfig::default();
    config.apply_text(&config_text)?;
    let grid = config.grid()?;

    let start = if dhat_path(estimates, 0).exists() {
        0
    } else if dhat_path(estimates, 1).exists() {
        1
    } else {
        return Err(Error::Invalid(format!(
            "no depth estimates found under {}",
            estimates.display()
        )));
    };
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for k in start.. {
        let dp = dhat_path(estimates, k);
        if !dp.exists() {
            break;
        }
        let dhat = DepthField {
            values: read_fgrid(&dp)?,
        };
        let tp = truth_path(truth_dir, k);
        let truth = DepthField {
            values: read_fgrid(&tp)?,
        };
        if dhat.values.dims() != truth.values.dims() {
            return Err(Error::DimensionMismatch {
                expected: truth.values.dims(),
                got: dhat.values.dims(),
            });
        }
        let row = EvalRow {
            frame: k,
            global: global_error(&dhat, &truth, &grid)?,
            linf: linf_error(&dhat, &truth)?,
            l1: lp_error(&dhat, &truth, &grid, 1.0)?,
            l2: lp_error(&dhat, &truth, &grid, 2.0)?,
        };
        table.push(vec![k as f64, row.global, row.linf, row.l1, row.l2]);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Invalid("no frames evaluated".into()));
    }
    write_table_csv(
        &estimates.join("eval.csv"),
        "frame,global_error,linf,l1,l2",
        &table,
    )?;
    let final_global = rows.last().unwrap().global;
    let pass = threshold.map(|t| final_global <= t).unwrap_or(true);
    Ok(EvalSummary {
        rows,
        final_global,
        pass,
    })
}
