//! Command-line front end: simulation of the dependence examples, marginal
//! standardization, two-stage model fitting, boundary/risk prediction,
//! diagnostics, and the replicate study harness.
//!
//! Exit codes: 0 success, 1 internal failure, 2 data or configuration
//! error.

use clap::{Parser, Subcommand};
use geomx_cli::commands;
use geomx_cli::config::RunConfig;
use geomx::Result;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "geomx",
    version,
    about = "Time-varying limit sets and joint-tail risk for bivariate data"
)]
struct Cli {
    /// Config file with key=value defaults (flags override it)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; all stages derive named streams from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Norm for the radial decomposition: l1, l2, linf
    #[arg(long, global = true)]
    norm: Option<String>,
    /// Threshold quantile level
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Time basis dimension
    #[arg(long, global = true)]
    kappa_t: Option<usize>,
    /// Angle basis dimension
    #[arg(long, global = true)]
    kappa_phi: Option<usize>,
    /// Smoothing grid lower bound
    #[arg(long, global = true)]
    lambda_min: Option<f64>,
    /// Smoothing grid upper bound
    #[arg(long, global = true)]
    lambda_max: Option<f64>,
    /// Smoothing grid size per axis
    #[arg(long, global = true)]
    lambda_count: Option<usize>,
    /// Angular grid resolution
    #[arg(long, global = true)]
    phi_grid: Option<usize>,
    /// Worker thread cap
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dependence example onto Laplace margins
    Simulate(commands::simulate::SimulateArgs),
    /// Standardize price series onto the Laplace scale
    Standardize(commands::standardize::StandardizeArgs),
    /// Fit the two-stage model on a pair series
    Fit(commands::fit::FitArgs),
    /// Boundary curves and tail-dependence coefficients from a model
    PredictBoundary(commands::predict_boundary::PredictBoundaryArgs),
    /// Model-checking diagnostics
    Diagnose(commands::diagnose::DiagnoseArgs),
    /// Conditional angular density against local histograms
    DensityCheck(commands::density_check::DensityCheckArgs),
    /// Simulate from the fitted joint tail
    SimulateTail(commands::simulate_tail::SimulateTailArgs),
    /// Tail-dependence trajectories, return-level sets, VaR/CoVaR
    Risk(commands::risk::RiskArgs),
    /// Replicate simulation study with oracle truth columns
    Simstudy(commands::simstudy::SimstudyArgs),
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(v) = &cli.norm {
        cfg.set("norm", v)?;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.tau {
        cfg.tau = v;
    }
    if let Some(v) = cli.kappa_t {
        cfg.kappa_t = v;
    }
    if let Some(v) = cli.kappa_phi {
        cfg.kappa_phi = v;
    }
    if let Some(v) = cli.lambda_min {
        cfg.lambda_min = v;
    }
    if let Some(v) = cli.lambda_max {
        cfg.lambda_max = v;
    }
    if let Some(v) = cli.lambda_count {
        cfg.lambda_count = v;
    }
    if let Some(v) = cli.phi_grid {
        cfg.phi_grid = v;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| geomx::Error::config(format!("thread pool: {e}")))?;
    }
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Simulate(args) => commands::simulate::run(args, &cfg),
        Command::Standardize(args) => commands::standardize::run(args, &cfg),
        Command::Fit(args) => commands::fit::run(args, &cfg),
        Command::PredictBoundary(args) => commands::predict_boundary::run(args, &cfg),
        Command::Diagnose(args) => commands::diagnose::run(args, &cfg),
        Command::DensityCheck(args) => commands::density_check::run(args, &cfg),
        Command::SimulateTail(args) => commands::simulate_tail::run(args, &cfg),
        Command::Risk(args) => commands::risk::run(args, &cfg),
        Command::Simstudy(args) => commands::simstudy::run(args, &cfg),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_user_error() { 2 } else { 1 });
        }
    }
}
