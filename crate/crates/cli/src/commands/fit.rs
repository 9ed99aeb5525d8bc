//! `fit`: the two-stage estimation on a Laplace-scale pair series, plus the
//! angular density of exceedances; writes the model file.

use crate::config::RunConfig;
use crate::csvio::read_pair_series;
use crate::model_file::{build_id, save_model, ModelFile};
use clap::Args;
use geomx::gauge_fit::{fit_gauge, GaugeFitConfig};
use geomx::quantile_fit::{exceedances, fit_radial_quantile, polar_series, QuantileFitConfig};
use geomx::tail::{default_angle_bandwidth, default_time_bandwidth, fit_angular_density};
use geomx::{Error, Result};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Input pair CSV (t, x1, x2) on Laplace margins
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file
    #[arg(long)]
    pub out: PathBuf,
    /// Fixed smoothing "lambda_t,lambda_phi" for both stages (skips CV)
    #[arg(long)]
    pub fixed_lambda: Option<String>,
    /// Fixed smoothing for the quantile stage only
    #[arg(long)]
    pub fixed_lambda_quantile: Option<String>,
    /// Fixed smoothing for the gauge stage only
    #[arg(long)]
    pub fixed_lambda_gauge: Option<String>,
    /// Angle kernel concentration (von Mises kappa) for the angular density
    #[arg(long)]
    pub h1: Option<f64>,
    /// Time kernel bandwidth for the angular density
    #[arg(long)]
    pub h2: Option<f64>,
    /// Margins files (from `standardize`); pass twice to embed both assets
    #[arg(long, num_args = 1, action = clap::ArgAction::Append)]
    pub margins: Vec<PathBuf>,
    /// Experimental: free gamma shape in the gauge stage
    #[arg(long, default_value_t = false)]
    pub free_shape: bool,
}

pub fn run(args: &FitArgs, cfg: &RunConfig) -> Result<()> {
    let series = read_pair_series(&args.data)?;
    if series.is_empty() {
        return Err(Error::data("empty input series"));
    }
    let t_len = series.t.iter().cloned().fold(f64::MIN, f64::max).round() as usize;
    let polar = polar_series(&series, cfg.norm)?;

    let fixed_both = args
        .fixed_lambda
        .as_deref()
        .map(super::parse_lambda_pair)
        .transpose()?;
    let fixed_q = args
        .fixed_lambda_quantile
        .as_deref()
        .map(super::parse_lambda_pair)
        .transpose()?
        .or(fixed_both);
    let fixed_g = args
        .fixed_lambda_gauge
        .as_deref()
        .map(super::parse_lambda_pair)
        .transpose()?
        .or(fixed_both);

    let qcfg = QuantileFitConfig {
        tau: cfg.tau,
        kappa_t: cfg.kappa_t,
        kappa_phi: cfg.kappa_phi,
        lambda_grid: cfg.lambda_grid(),
        fixed_lambda: fixed_q,
        cv_folds: 5,
    };
    eprintln!("stage 1: radial quantile (tau = {}, n = {})", cfg.tau, polar.len());
    let qout = fit_radial_quantile(&polar, t_len, cfg.norm, &qcfg)
        .map_err(|e| Error::Data(format!("stage-1 quantile fit: {e}")))?;
    for wmsg in &qout.report.warnings {
        eprintln!("warning: {wmsg}");
    }
    eprintln!(
        "stage 1 selected lambda = ({}, {}), final gradient {:.2e}",
        qout.report.lambda_t, qout.report.lambda_phi, qout.report.final_grad_norm
    );

    let exc = exceedances(&qout.fit, &polar)?;
    eprintln!(
        "stage 2: truncated-gamma gauge on {} exceedances ({:.3} of the sample)",
        exc.len(),
        exc.len() as f64 / polar.len() as f64
    );
    let gcfg = GaugeFitConfig {
        kappa_t: cfg.kappa_t,
        kappa_phi: cfg.kappa_phi,
        lambda_grid: cfg.lambda_grid(),
        fixed_lambda: fixed_g,
        cv_folds: 5,
        free_shape: args.free_shape,
    };
    let gout = fit_gauge(&exc, t_len, cfg.tau, &gcfg)?;
    for wmsg in &gout.report.warnings {
        eprintln!("warning: {wmsg}");
    }
    eprintln!(
        "stage 2 selected lambda = ({}, {}), final gradient {:.2e}",
        gout.report.lambda_t, gout.report.lambda_phi, gout.report.final_grad_norm
    );

    let h1 = args.h1.unwrap_or_else(default_angle_bandwidth);
    let h2 = args.h2.unwrap_or_else(|| default_time_bandwidth(t_len));
    let angular = fit_angular_density(&exc, h1, h2)?;

    let margins = match args.margins.len() {
        0 => None,
        2 => Some(Box::new([
            crate::model_file::load_margins(&args.margins[0])?,
            crate::model_file::load_margins(&args.margins[1])?,
        ])),
        n => {
            return Err(Error::config(format!(
                "expected exactly two --margins files for a pair, got {n}"
            )))
        }
    };

    let model = ModelFile {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        build: build_id(),
        norm: cfg.norm,
        tau: cfg.tau,
        quantile: qout.fit.model,
        gauge_shape: gout.fit.shape,
        gauge: gout.fit.model,
        angular,
        margins,
    };
    // validate consistency before persisting
    model.tail_model()?;
    save_model(&args.out, &model)?;
    eprintln!("wrote model to {}", args.out.display());
    Ok(())
}
