//! Acceptance suite: every reference behavior of the estimators, one test
//! per criterion, each printing a pass line with the measured numbers
//! (visible with `cargo test --test acceptance -- --nocapture`).

use depthfield::config::{ExperimentConfig, Mode};
use depthfield::flow::{hs_cost, hs_residual, spatial_derivatives, DerivativeStack, FlowField};
use depthfield::geometry::{predicted_flow, MotionSample, PixelGrid, Pose};
use depthfield::grid::{DepthField, GammaField, ScalarGrid};
use depthfield::metrics::ErrorReport;
use depthfield::observer::{
    observer_flow_step, observer_gamma_step, run_observer, ObserverConfig, ObserverInput, RunMode,
};
use depthfield::scene::{generate_sequence, truth_depth_field, SceneModel};
use depthfield::vardepth::{
    cost_j_with, data_terms, gamma_residual, solve_gamma_with, LaplacianKind, VarConfig,
};
use nalgebra::Vector3;

fn desk_grid() -> PixelGrid {
    PixelGrid::from_fov_degrees(160, 120, 50.0, 40.0).unwrap()
}

fn run_pipeline(cfg: &ExperimentConfig, mode: RunMode, frames: usize) -> Vec<ErrorReport> {
    let mut cfg = cfg.clone();
    cfg.frames = frames;
    let grid = cfg.grid().unwrap();
    let seq =
        generate_sequence(&grid, &cfg.scene(), &cfg.trajectory(), cfg.sigma, cfg.seed).unwrap();
    let input = ObserverInput::from_sequence(&seq);
    run_observer(&input, &mode, &cfg.run_config()).unwrap().reports
}

fn lcg_grid(w: usize, h: usize, scale: f64, state: &mut u64) -> ScalarGrid {
    let mut vals = Vec::with_capacity(w * h);
    for _ in 0..w * h {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        vals.push((((*state >> 33) as f64 / (1u64 << 31) as f64) - 1.0) * scale);
    }
    ScalarGrid::from_vec(w, h, vals).unwrap()
}

/// Flow observer at low noise: fast initial contraction and a small
/// converged error.
#[test]
fn criterion_01_flow_observer_low_noise() {
    let start = std::time::Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.sigma = 1.0;
    cfg.mode = Mode::FlowObserver;
    cfg.k_flow = 500.0;
    let reports = run_pipeline(
        &cfg,
        RunMode::FlowObserver {
            external_flow: None,
        },
        41,
    );
    let e0 = reports[0].global_error;
    let e10 = reports[10].global_error;
    let e40 = reports[40].global_error;
    assert!(
        e10 <= e0 * (2.0 / 3.0),
        "E after 10 frames {e10:.4} not reduced by 1/3 from {e0:.4}"
    );
    assert!(e40 <= 0.03, "E after 40 frames {e40:.4} above 3%");
    println!(
        "criterion 1: PASS — E0 {e0:.4} -> E10 {e10:.4} (<= 2/3), E40 {e40:.4} <= 0.03, {:.1}s",
        start.elapsed().as_secs_f64()
    );
}

/// Flow observer at heavy noise: converged error in the reference band.
#[test]
fn criterion_02_flow_observer_heavy_noise() {
    let mut cfg = ExperimentConfig::default();
    cfg.sigma = 20.0;
    cfg.mode = Mode::FlowObserver;
    cfg.k_flow = 50.0;
    cfg.derivative_presmooth = 1;
    let reports = run_pipeline(
        &cfg,
        RunMode::FlowObserver {
            external_flow: None,
        },
        101,
    );
    let tail: Vec<f64> = reports[81..=100].iter().map(|r| r.global_error).collect();
    let converged = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!(
        (0.08..=0.20).contains(&converged),
        "converged E {converged:.4} outside [0.08, 0.20]"
    );
    println!("criterion 2: PASS — converged E {converged:.4} in [0.08, 0.20]");
}

/// Variational estimator alone at low noise converges within six frames.
#[test]
fn criterion_03_variational_low_noise() {
    let mut cfg = ExperimentConfig::default();
    cfg.sigma = 1.0;
    cfg.mode = Mode::VariationalOnly;
    cfg.alpha_var = 300.0;
    let reports = run_pipeline(&cfg, RunMode::VariationalOnly, 8);
    let e6 = reports
        .iter()
        .find(|r| r.frame_index == 6)
        .unwrap()
        .global_error;
    assert!(e6 <= 0.06, "E(gamma) at frame 6 is {e6:.4}, above 6%");
    println!("criterion 3: PASS — variational E at frame 6 {e6:.4} <= 0.06");
}

/// Inverse-depth observer at low noise over the full sequence.
#[test]
fn criterion_04_gamma_observer_low_noise() {
    let mut cfg = ExperimentConfig::default();
    cfg.sigma = 1.0;
    cfg.mode = Mode::GammaObserver;
    cfg.k_gamma = 50.0;
    cfg.alpha_var = 300.0;
    let reports = run_pipeline(&cfg, RunMode::GammaObserver, 120);
    let final_e = reports.last().unwrap().global_error;
    assert!(final_e <= 0.015, "final E {final_e:.4} above 1.5%");
    println!("criterion 4: PASS — final E {final_e:.4} <= 0.015 over 120 frames");
}

/// Inverse-depth observer at heavy noise with the stronger regularization.
#[test]
fn criterion_05_gamma_observer_heavy_noise() {
    let mut cfg = ExperimentConfig::default();
    cfg.sigma = 20.0;
    cfg.mode = Mode::GammaObserver;
    cfg.k_gamma = 50.0;
    cfg.alpha_var = 1000.0;
    cfg.derivative_presmooth = 2;
    let reports = run_pipeline(&cfg, RunMode::GammaObserver, 120);
    let final_e = reports.last().unwrap().global_error;
    assert!(final_e <= 0.06, "final E {final_e:.4} above 6%");
    println!("criterion 5: PASS — final E {final_e:.4} <= 0.06 at sigma=20");
}

/// Sup-norm stability: with analytic flow and exact correction inputs the
/// max depth error never grows beyond a discretization slack.
#[test]
fn criterion_06_linf_stability() {
    let grid = desk_grid();
    let (w, h) = grid.dims();
    let scene = SceneModel::default();
    let dt = 1.0 / 60.0;
    let v = Vector3::new(1.0, 0.0, 0.0);
    let pose_at = |t: f64| Pose {
        position: v * t,
        orientation: nalgebra::UnitQuaternion::identity(),
    };
    let mut dhat = DepthField::constant(w, h, 5.0);
    let cfg = ObserverConfig {
        k: 500.0,
        dt,
        ..ObserverConfig::default()
    };
    let mut sups = Vec::new();
    let mut mean_depth = 0.0;
    for k in 0..60 {
        let t_mid = (k as f64 + 0.5) * dt;
        let m = MotionSample::new(v, Vector3::zeros(), t_mid);
        let truth_mid = truth_depth_field(&pose_at(t_mid), &grid, &scene).unwrap();
        let mut flow = FlowField::zeros(w, h);
        for j in 0..h {
            for i in 0..w {
                let (z1, z2) = grid.z(i, j);
                let (v1, v2) = predicted_flow(z1, z2, &m, 1.0 / truth_mid.values.at(i, j));
                flow.v1.set(i, j, v1);
                flow.v2.set(i, j, v2);
            }
        }
        let (next, _) = observer_flow_step(&dhat, &flow, &m, &grid, &cfg).unwrap();
        dhat = next;
        let truth = truth_depth_field(&pose_at((k + 1) as f64 * dt), &grid, &scene).unwrap();
        mean_depth = truth.values.mean();
        let sup = dhat
            .values
            .values()
            .iter()
            .zip(truth.values.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    let slack = 1e-3 * mean_depth;
    let mut worst_rise = f64::NEG_INFINITY;
    for pair in sups.windows(2) {
        worst_rise = worst_rise.max(pair[1] - pair[0]);
        assert!(
            pair[1] <= pair[0] + slack,
            "sup error rose from {} to {} (slack {slack})",
            pair[0],
            pair[1]
        );
    }
    println!(
        "criterion 6: PASS — sup error non-increasing over 60 frames (worst rise {worst_rise:.2e} vs slack {slack:.2e})"
    );
}

/// Exponential contraction rate of the inverse-depth observer against the
/// scalar decay oracle.
#[test]
fn criterion_07_contraction_rate() {
    let grid = PixelGrid::from_fov_degrees(80, 60, 50.0, 40.0).unwrap();
    let (w, h) = grid.dims();
    let dt = 1.0 / 60.0;
    let k_gain = 50.0;
    let v = Vector3::new(1.0, 0.0, 0.0);
    let mut reference = DepthField::constant(w, h, 3.0);
    let mut dhat = DepthField::constant(w, h, 3.5);
    let cfg_ref = ObserverConfig {
        k: 0.0,
        dt,
        ..ObserverConfig::default()
    };
    let cfg_obs = ObserverConfig {
        k: k_gain,
        dt,
        ..ObserverConfig::default()
    };
    let sup_err = |a: &DepthField, b: &DepthField| -> f64 {
        a.values
            .values()
            .iter()
            .zip(b.values.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let e0 = sup_err(&dhat, &reference);
    let steps = 60;
    let mut log_errs = Vec::new();
    for s in 0..steps {
        let m = MotionSample::new(v, Vector3::zeros(), s as f64 * dt);
        let gamma = reference.to_gamma(0.1);
        let (r, _) = observer_gamma_step(&reference, &gamma, &m, &grid, &cfg_ref).unwrap();
        let (d, _) = observer_gamma_step(&dhat, &gamma, &m, &grid, &cfg_obs).unwrap();
        reference = r;
        dhat = d;
        log_errs.push((sup_err(&dhat, &reference) / e0).ln());
    }
    // least-squares slope of log error vs time
    let n = log_errs.len() as f64;
    let mut st = 0.0;
    let mut se = 0.0;
    let mut stt = 0.0;
    let mut ste = 0.0;
    for (idx, le) in log_errs.iter().enumerate() {
        let t = (idx + 1) as f64 * dt;
        st += t;
        se += le;
        stt += t * t;
        ste += t * le;
    }
    let slope = (n * ste - st * se) / (n * stt - st * st);
    let target = -k_gain / 3.0;
    let rel = (slope - target).abs() / target.abs();
    assert!(
        rel <= 0.20,
        "decay slope {slope:.3} deviates {rel:.3} from oracle {target:.3}"
    );
    println!(
        "criterion 7: PASS — log-error slope {slope:.2} vs oracle {target:.2} ({:.1}% off)",
        rel * 100.0
    );
}

/// The diffusion systems are the exact stationarity conditions of their
/// discrete costs: finite-difference gradients match the assembled
/// residuals.
#[test]
fn criterion_08_euler_lagrange_consistency() {
    let (w, h) = (16, 16);
    let grid = PixelGrid::from_fov_degrees(w, h, 50.0, 40.0).unwrap();
    let mu = grid.dz1() * grid.dz2();
    let mut state = 0xfeed_u64;

    // inverse-depth cost
    let terms = depthfield::vardepth::DataTerms {
        f: lcg_grid(w, h, 2.0, &mut state),
        g: lcg_grid(w, h, 2.0, &mut state),
    };
    let gamma = GammaField {
        values: lcg_grid(w, h, 0.5, &mut state),
    };
    let alpha = 0.05;
    let kind = LaplacianKind::RiemannianFlux;
    let res = gamma_residual(&gamma, &terms, &grid, alpha, kind).unwrap();
    let max_res = res.max_abs();
    let eps = 1e-6;
    let mut worst_gamma = 0.0_f64;
    for j in 0..h {
        for i in 0..w {
            let mut gp = gamma.clone();
            let mut gm = gamma.clone();
            gp.values.set(i, j, gp.values.at(i, j) + eps);
            gm.values.set(i, j, gm.values.at(i, j) - eps);
            let cp = cost_j_with(&gp, &terms, &grid, alpha, kind).unwrap();
            let cm = cost_j_with(&gm, &terms, &grid, alpha, kind).unwrap();
            let fd = (cp - cm) / (2.0 * eps) / (2.0 * mu);
            worst_gamma = worst_gamma.max((fd - res.at(i, j)).abs() / max_res);
        }
    }
    assert!(worst_gamma < 1e-4, "cost gradient mismatch {worst_gamma:.2e}");

    // optical-flow cost
    let stack = DerivativeStack {
        yz1: lcg_grid(w, h, 3.0, &mut state),
        yz2: lcg_grid(w, h, 3.0, &mut state),
        yt: lcg_grid(w, h, 2.0, &mut state),
    };
    let flow = FlowField {
        v1: lcg_grid(w, h, 1.0, &mut state),
        v2: lcg_grid(w, h, 1.0, &mut state),
    };
    let hs_alpha = 0.8;
    let (r1, r2) = hs_residual(&flow, &stack, hs_alpha);
    let max_res = r1.max_abs().max(r2.max_abs());
    let mut worst_hs = 0.0_f64;
    for j in 0..h {
        for i in 0..w {
            for comp in 0..2 {
                let mut fp = flow.clone();
                let mut fm = flow.clone();
                let (gp, gm) = if comp == 0 {
                    (&mut fp.v1, &mut fm.v1)
                } else {
                    (&mut fp.v2, &mut fm.v2)
                };
                gp.set(i, j, gp.at(i, j) + eps);
                gm.set(i, j, gm.at(i, j) - eps);
                let cp = hs_cost(&fp, &stack, &grid, hs_alpha).unwrap();
                let cm = hs_cost(&fm, &stack, &grid, hs_alpha).unwrap();
                let fd = (cp - cm) / (2.0 * eps) / (2.0 * mu);
                let r = if comp == 0 { r1.at(i, j) } else { r2.at(i, j) };
                worst_hs = worst_hs.max((fd - r).abs() / max_res);
            }
        }
    }
    assert!(worst_hs < 1e-6, "flow cost gradient mismatch {worst_hs:.2e}");
    println!(
        "criterion 8: PASS — gradient consistency {worst_gamma:.1e} (depth, < 1e-4), {worst_hs:.1e} (flow, < 1e-6)"
    );
}

/// Dropping the sphere curvature from the diffusion operator changes the
/// inverse-depth solution by less than 3% over the 50x40 degree grid.
#[test]
fn criterion_09_small_angle_fidelity() {
    let mut cfg = ExperimentConfig::default();
    cfg.sigma = 1.0;
    cfg.frames = 8;
    let grid = cfg.grid().unwrap();
    let seq = generate_sequence(&grid, &cfg.scene(), &cfg.trajectory(), 1.0, 3).unwrap();
    let dt = seq.dt();
    let (w, h) = grid.dims();
    // same regularization in flux units for both operators
    let var = VarConfig {
        alpha: 300.0 * grid.dz1(),
        iterations: 200,
        small_angle: false,
        clamp_min: 0.0,
        warm_start: true,
    };
    let mut g_riem = GammaField::constant(w, h, 0.2);
    let mut g_eucl = GammaField::constant(w, h, 0.2);
    for k in 0..seq.len() - 1 {
        let stack =
            spatial_derivatives(&seq.frames[k], &seq.frames[k + 1], &grid, dt, 0).unwrap();
        let m = MotionSample::midpoint(&seq.motions[k], &seq.motions[k + 1]);
        let terms = data_terms(&stack, &m, &grid, dt).unwrap();
        g_riem =
            solve_gamma_with(&terms, &var, &grid, &g_riem, LaplacianKind::RiemannianFlux).unwrap();
        g_eucl =
            solve_gamma_with(&terms, &var, &grid, &g_eucl, LaplacianKind::EuclideanFlux).unwrap();
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in g_riem.values.values().iter().zip(g_eucl.values.values()) {
        num += (a - b) * (a - b);
        den += a * a;
    }
    let rel = (num / den).sqrt();
    assert!(rel <= 0.03, "small-angle discrepancy {rel:.4} above 3%");
    println!("criterion 9: PASS — small-angle solution discrepancy {rel:.4} <= 0.03");
}

/// Byte-identical outputs for equal seeds, serial and row-parallel alike.
#[test]
fn criterion_10_determinism() {
    use depthfield::pipeline::{cmd_estimate, cmd_eval, cmd_synth};

    let mut cfg = ExperimentConfig::default();
    cfg.width = 64;
    cfg.height = 48;
    cfg.frames = 6;
    cfg.sigma = 20.0;
    cfg.seed = 42;
    cfg.mode = Mode::GammaObserver;
    cfg.var_iters = 60;
    cfg.derivative_presmooth = 2;

    let run_all = |threads: usize, root: &std::path::Path| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let data = root.join("data");
            let est = root.join("est");
            cmd_synth(&cfg, &data).unwrap();
            cmd_estimate(&data, &cfg, &est).unwrap();
            cmd_eval(&est, &data, None).unwrap();
        });
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_all(1, dir_a.path());
    run_all(4, dir_b.path());

    let mut compared = 0;
    for sub in ["data", "est"] {
        let mut names: Vec<String> = std::fs::read_dir(dir_a.path().join(sub))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = std::fs::read(dir_a.path().join(sub).join(&name)).unwrap();
            let b = std::fs::read(dir_b.path().join(sub).join(&name)).unwrap();
            assert_eq!(a, b, "{sub}/{name} differs between runs");
            compared += 1;
        }
    }
    println!(
        "criterion 10: PASS — {compared} output files byte-identical across 1-thread and 4-thread runs"
    );
}
