//! `density-check`: the fitted conditional angular density next to a local
//! histogram of exceedance angles, for manual bandwidth tuning.

use crate::config::RunConfig;
use crate::csvio::{fmt, CsvWriter};
use crate::model_file::load_model;
use clap::Args;
use geomx::splines::TWO_PI;
use geomx::{Error, Result};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct DensityCheckArgs {
    /// Model file from `fit`
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated time indices to inspect
    #[arg(long)]
    pub t: String,
    /// Half-width of the local time window for the histogram (defaults to
    /// the fitted time bandwidth)
    #[arg(long)]
    pub window: Option<f64>,
    /// Histogram bins over [0, 2pi)
    #[arg(long, default_value_t = 36)]
    pub bins: usize,
    /// Output CSV
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &DensityCheckArgs, cfg: &RunConfig) -> Result<()> {
    let model = load_model(&args.model)?;
    let ts = super::parse_t_list(&args.t)?;
    if args.bins < 4 {
        return Err(Error::config("need at least 4 histogram bins"));
    }
    let window = args.window.unwrap_or(model.angular.h2);
    let provenance = format!(
        "geomx density-check config_hash={} window={window} bins={}",
        cfg.hash(),
        args.bins
    );
    let mut w = CsvWriter::create(&args.out, &provenance, "t,phi,density,histogram")?;
    for &t in &ts {
        let slice = model.angular.conditional(t, cfg.phi_grid);
        // local histogram over exceedance angles with |t* - t| <= window
        let mut counts = vec![0usize; args.bins];
        let mut total = 0usize;
        for (phi, time) in model.angular.angles.iter().zip(&model.angular.times) {
            if (time - t).abs() <= window {
                let b = ((phi / TWO_PI) * args.bins as f64) as usize % args.bins;
                counts[b] += 1;
                total += 1;
            }
        }
        if total == 0 {
            eprintln!("warning: no exceedances within {window} of t={t}");
        }
        let bin_width = TWO_PI / args.bins as f64;
        for (k, phi) in slice.grid.iter().enumerate() {
            let b = ((phi / TWO_PI) * args.bins as f64) as usize % args.bins;
            let hist = if total > 0 {
                counts[b] as f64 / (total as f64 * bin_width)
            } else {
                0.0
            };
            w.row(&[fmt(t), fmt(*phi), fmt(slice.density[k]), fmt(hist)])?;
        }
    }
    w.finish()?;
    Ok(())
}
