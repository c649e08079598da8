//! Experiment driver CLI.
//!
//! Runs one of the built-in experiment presets, optionally layered
//! over a JSON configuration file; flags override file values. Exit
//! codes: 0 success, 2 configuration error, 3 divergence, 4 graph
//! generation failure, 5 oracle non-convergence, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use qgradtrack::dynamics::InitMode;
use qgradtrack::error::Error;
use qgradtrack::experiments::{run_experiment, ExperimentConfig};
use qgradtrack::quantizer::QuantizerSpec;

#[derive(Parser, Debug)]
#[command(
    name = "qgradtrack",
    about = "Quantized gradient-tracking experiments over switching networks",
    version
)]
struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Experiment preset: svm_paper, quadratic_smoke, rho_sweep,
    /// quantizer_compare, or init_compare. Required without --config.
    #[arg(long)]
    experiment: Option<String>,

    /// Base seed; network, initialization, and data seeds derive from
    /// it. Required without --config.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for run artifacts. Required without --config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Gradient step-size.
    #[arg(long)]
    alpha: Option<f64>,

    /// Quantization level.
    #[arg(long)]
    rho: Option<f64>,

    /// Quantizer kind: log_scale, uniform, or identity.
    #[arg(long)]
    quantizer: Option<String>,

    /// Simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,

    /// Integration step in seconds.
    #[arg(long, name = "step")]
    h: Option<f64>,

    /// Tracking-variable initialization: zero_y or gradient_y.
    #[arg(long)]
    init: Option<String>,

    /// Agent count.
    #[arg(long)]
    n: Option<usize>,

    /// Erdős–Rényi linking probability.
    #[arg(long)]
    p: Option<f64>,

    /// Seconds between topology switches.
    #[arg(long)]
    dwell: Option<f64>,

    /// Size of the pre-generated topology pool.
    #[arg(long)]
    pool: Option<usize>,

    /// Draw a fresh topology every dwell interval instead of cycling a
    /// pool.
    #[arg(long)]
    fresh_per_switch: bool,

    /// Record every this many steps.
    #[arg(long)]
    record_stride: Option<usize>,

    /// Dataset size for SVM experiments.
    #[arg(long)]
    n_points: Option<usize>,

    /// SVM margin-size parameter C.
    #[arg(long, name = "svm-c")]
    svm_c: Option<f64>,

    /// SVM hinge smoothing parameter mu.
    #[arg(long)]
    mu: Option<f64>,

    /// Fraction of the dataset assigned to each agent.
    #[arg(long)]
    fraction: Option<f64>,

    /// Synthetic dataset class separation.
    #[arg(long)]
    margin: Option<f64>,

    /// Comma-separated quantization levels for rho_sweep.
    #[arg(long)]
    rho_list: Option<String>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            let (experiment, seed, out) = match (&cli.experiment, cli.seed, &cli.out) {
                (Some(e), Some(s), Some(o)) => (e, s, o),
                _ => {
                    return Err(Error::InvalidConfig(
                        "--experiment, --seed, and --out are required without --config"
                            .to_string(),
                    ))
                }
            };
            ExperimentConfig::preset(experiment.parse()?, seed, out.clone())
        }
    };

    if let Some(e) = &cli.experiment {
        cfg.experiment = e.parse()?;
    }
    if let Some(seed) = cli.seed {
        cfg.network.seed = seed;
        cfg.sim.seed = seed.wrapping_add(1);
        cfg.data_seed = seed.wrapping_add(2);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(alpha) = cli.alpha {
        cfg.sim.alpha = alpha;
        cfg.alpha_fraction_of_bound = None;
    }
    let kind = cli
        .quantizer
        .as_deref()
        .unwrap_or(match cfg.sim.quantizer.kind {
            qgradtrack::QuantizerKind::LogScale => "log_scale",
            qgradtrack::QuantizerKind::Uniform => "uniform",
            qgradtrack::QuantizerKind::Identity => "identity",
        })
        .to_string();
    let rho = cli.rho.unwrap_or(cfg.sim.quantizer.rho);
    cfg.sim.quantizer = match kind.as_str() {
        "log_scale" => QuantizerSpec::log_scale(rho)?,
        "uniform" => QuantizerSpec::uniform(rho)?,
        "identity" => QuantizerSpec::identity(),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown quantizer kind `{other}`"
            )))
        }
    };
    if let Some(d) = cli.duration {
        cfg.sim.duration = d;
    }
    if let Some(h) = cli.h {
        cfg.sim.h = h;
    }
    if let Some(init) = &cli.init {
        cfg.sim.init_mode = match init.as_str() {
            "zero_y" => InitMode::ZeroY,
            "gradient_y" => InitMode::GradientY,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown init mode `{other}` (expected zero_y or gradient_y)"
                )))
            }
        };
    }
    if let Some(n) = cli.n {
        cfg.network.n = n;
    }
    if let Some(p) = cli.p {
        cfg.network.p = p;
    }
    if let Some(dwell) = cli.dwell {
        cfg.network.dwell = dwell;
    }
    if let Some(pool) = cli.pool {
        cfg.network.pool = pool;
    }
    if cli.fresh_per_switch {
        cfg.network.regenerate_per_switch = true;
    }
    if let Some(stride) = cli.record_stride {
        cfg.sim.record_stride = stride;
    }
    if let Some(n_points) = cli.n_points {
        cfg.svm.n_points = n_points;
    }
    if let Some(c) = cli.svm_c {
        cfg.svm.c = c;
    }
    if let Some(mu) = cli.mu {
        cfg.svm.mu = mu;
    }
    if let Some(fraction) = cli.fraction {
        cfg.svm.fraction_per_agent = fraction;
    }
    if let Some(margin) = cli.margin {
        cfg.svm.margin = margin;
    }
    if let Some(list) = &cli.rho_list {
        cfg.rho_list = list
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad rho value `{tok}`")))
            })
            .collect::<Result<_, _>>()?;
    }
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_)
        | Error::DimensionMismatch { .. }
        | Error::UnsupportedQuantizer { .. }
        | Error::NonFinite { .. }
        | Error::Json(_) => 2,
        Error::Divergence { .. } => 3,
        Error::GenerationFailure { .. } | Error::ConnectivityViolation { .. } => 4,
        Error::NonConvergence { .. } => 5,
        Error::Eigensolver(_) | Error::Io(_) => 1,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::InvalidConfig(_) => "invalid_config",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::UnsupportedQuantizer { .. } => "unsupported_quantizer",
        Error::NonFinite { .. } => "non_finite_input",
        Error::Json(_) => "json",
        Error::Divergence { .. } => "divergence",
        Error::GenerationFailure { .. } => "generation_failure",
        Error::ConnectivityViolation { .. } => "connectivity_violation",
        Error::NonConvergence { .. } => "oracle_non_convergence",
        Error::Eigensolver(_) => "eigensolver",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| {
        log::info!(
            "running {:?} into {}",
            cfg.experiment,
            cfg.output_dir.display()
        );
        run_experiment(&cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let record = json!({
                "error": error_kind(&err),
                "message": err.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
