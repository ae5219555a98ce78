use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use depthfield::config::{ExperimentConfig, Mode};
use depthfield::pipeline::{cmd_estimate, cmd_eval, cmd_flow, cmd_synth};

#[derive(Parser)]
#[command(
    name = "depthfield",
    about = "Dense depth estimation from monocular sequences with known camera motion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Named preset: desk, paper-sigma1, paper-sigma1-k100, paper-sigma20.
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Configuration file of `key = value` lines layered over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Mode override: flow-observer, gamma-observer, variational-only,
    /// hs-flow-only.
    #[arg(long)]
    mode: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> depthfield::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::preset(&self.preset)?;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| depthfield::Error::io_at(path.clone(), e))?;
            cfg.apply_text(&text)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = &self.mode {
            cfg.mode = Mode::parse(mode)
                .ok_or_else(|| depthfield::Error::Invalid(format!("unknown mode `{mode}`")))?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset: frames, ground-truth depth, motion log.
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate Horn-Schunck optical flow for every frame pair.
    Flow {
        /// Dataset directory produced by `synth`.
        dataset: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; defaults to the dataset directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured depth estimation pipeline over a dataset.
    Estimate {
        /// Dataset directory produced by `synth`.
        dataset: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; defaults to `<dataset>/estimate`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score estimated depth fields against a dataset's ground truth.
    Eval {
        /// Directory holding `dhat_*.fgrid` estimates.
        estimates: PathBuf,
        /// Dataset directory holding `truth_depth_*.fgrid` and `config.txt`.
        truth: PathBuf,
        /// Exit nonzero when the final global error exceeds this value.
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn configure_threads() {
    if let Ok(value) = std::env::var("DEPTHFIELD_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run() -> depthfield::Result<bool> {
    let cli = Cli::parse();
    configure_threads();
    match cli.command {
        Command::Synth { config, out } => {
            let cfg = config.resolve()?;
            let frames = cmd_synth(&cfg, &out)?;
            println!("wrote {frames} frames to {}", out.display());
            Ok(true)
        }
        Command::Flow {
            dataset,
            config,
            out,
        } => {
            let cfg = config.resolve()?;
            let out = out.unwrap_or_else(|| dataset.clone());
            let pairs = cmd_flow(&dataset, &cfg, &out)?;
            println!("wrote {pairs} flow fields to {}", out.display());
            Ok(true)
        }
        Command::Estimate {
            dataset,
            config,
            out,
        } => {
            let cfg = config.resolve()?;
            let out = out.unwrap_or_else(|| dataset.join("estimate"));
            cmd_estimate(&dataset, &cfg, &out)?;
            println!("wrote estimates to {}", out.display());
            Ok(true)
        }
        Command::Eval {
            estimates,
            truth,
            threshold,
        } => {
            let summary = cmd_eval(&estimates, &truth, threshold)?;
            println!("frame  global      linf        l1          l2");
            for row in &summary.rows {
                println!(
                    "{:5}  {:.4e}  {:.4e}  {:.4e}  {:.4e}",
                    row.frame, row.global, row.linf, row.l1, row.l2
                );
            }
            println!("final global error: {:.6}", summary.final_global);
            if let Some(t) = threshold {
                println!(
                    "threshold {t}: {}",
                    if summary.pass { "pass" } else { "FAIL" }
                );
            }
            Ok(summary.pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
