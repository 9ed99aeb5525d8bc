//! `risk`: per-quadrant tail-dependence trajectories, return-level curves
//! at requested dates, and downside/upside VaR and CoVaR series. Values are
//! reported on the Laplace scale and, when marginal pipelines are embedded
//! in the model, on the original scale too.

use crate::config::{streams, RunConfig};
use crate::csvio::{fmt, CsvWriter};
use crate::model_file::load_model;
use clap::Args;
use geomx::geometry::{boundary_curve, default_phi_grid, eta_from_boundary, return_level_curve};
use geomx::tail::{estimate_covar, CovarSide};
use geomx::{Error, Result, RngStream};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct RiskArgs {
    /// Model file from `fit`
    #[arg(long)]
    pub model: PathBuf,
    /// Time indices for the return-level curves (comma separated); the eta
    /// and CoVaR series use a thinned grid over the whole horizon
    #[arg(long)]
    pub t: Option<String>,
    /// Return-level probability
    #[arg(long, default_value_t = 0.999)]
    pub p_rl: f64,
    /// CoVaR level
    #[arg(long, default_value_t = 0.01)]
    pub p_covar: f64,
    /// Tail simulations per time point
    #[arg(long, default_value_t = 100_000)]
    pub n_sim: usize,
    /// Number of grid points for the eta and CoVaR series
    #[arg(long, default_value_t = 101)]
    pub t_grid: usize,
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &RiskArgs, cfg: &RunConfig) -> Result<()> {
    let mf = load_model(&args.model)?;
    let model = mf.tail_model()?;
    let qfit = mf.quantile_fit();
    let gfit = mf.gauge_fit();
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let provenance = format!(
        "geomx risk config_hash={} seed={} p_rl={} p_covar={}",
        cfg.hash(),
        cfg.seed,
        args.p_rl,
        args.p_covar
    );
    let (t_min, t_max) = model.t_range();
    let t_grid: Vec<f64> = if args.t_grid <= 1 {
        vec![t_min]
    } else {
        (0..args.t_grid)
            .map(|i| t_min + (t_max - t_min) * i as f64 / (args.t_grid - 1) as f64)
            .collect()
    };
    let phi_grid = default_phi_grid(cfg.phi_grid);

    // eta trajectories over all four quadrants
    let eta_path = args.out_dir.join("eta.csv");
    let mut w = CsvWriter::create(&eta_path, &provenance, "t,eta_q1,eta_q2,eta_q3,eta_q4")?;
    let ge = gfit.model.evaluator()?;
    for &t in &t_grid {
        let curve = boundary_curve(|phi| Ok(ge.predict(phi, t)?.exp()), t, &phi_grid, mf.norm)?;
        let mut row = vec![fmt(t)];
        for quadrant in [(1, 1), (-1, 1), (-1, -1), (1, -1)] {
            row.push(fmt(eta_from_boundary(&curve, quadrant)?.value));
        }
        w.row(&row)?;
    }
    w.finish()?;

    // return-level curves at the requested dates
    let rl_ts = match &args.t {
        Some(list) => super::parse_t_list(list)?,
        None => vec![t_min, (t_min + t_max) / 2.0, t_max],
    };
    let rl_path = args.out_dir.join("return_level.csv");
    let mut w = CsvWriter::create(&rl_path, &provenance, "t,phi,x1,x2,q1,q2")?;
    for &t in &rl_ts {
        let curve = return_level_curve(&qfit, &gfit, t, args.p_rl, &phi_grid, mf.norm)?;
        let idx = (t.round() as usize).saturating_sub(1);
        for (k, &phi) in curve.phi_grid.iter().enumerate() {
            let (x, y) = curve.points[k];
            // original-scale point when margins are available
            let (q1, q2) = match &model.margins {
                Some(pipes) => (
                    fmt(pipes[0].return_from_laplace(x, idx)?),
                    fmt(pipes[1].return_from_laplace(y, idx)?),
                ),
                None => (String::new(), String::new()),
            };
            w.row(&[fmt(t), fmt(phi), fmt(x), fmt(y), q1, q2])?;
        }
    }
    w.finish()?;

    // VaR / CoVaR series
    let covar_path = args.out_dir.join("covar.csv");
    let mut w = CsvWriter::create(
        &covar_path,
        &provenance,
        "t,var_down,covar_down,var_up,covar_up,var_down_orig,covar_down_orig,var_up_orig,covar_up_orig",
    )?;
    for (i, &t) in t_grid.iter().enumerate() {
        let mut rng = RngStream::new(cfg.seed, streams::TAIL_SIM).child(i as u64);
        let down = estimate_covar(&model, t, args.p_covar, CovarSide::Downside, args.n_sim, &mut rng)?;
        let up = estimate_covar(&model, t, args.p_covar, CovarSide::Upside, args.n_sim, &mut rng)?;
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        w.row(&[
            fmt(t),
            fmt(down.var),
            fmt(down.covar),
            fmt(up.var),
            fmt(up.covar),
            opt(down.var_original),
            opt(down.covar_original),
            opt(up.var_original),
            opt(up.covar_original),
        ])?;
    }
    w.finish()?;
    eprintln!(
        "wrote {}, {}, {}",
        eta_path.display(),
        rl_path.display(),
        covar_path.display()
    );
    Ok(())
}
