//! `standardize`: price CSVs -> log-returns -> GARCH filter -> GPD margin
//! -> Laplace scale, with zero-return days dropped pairwise and the fitted
//! marginal pipelines saved for later inversion.

use crate::config::RunConfig;
use crate::csvio::{fmt, read_price_series, CsvWriter};
use crate::model_file::save_margins;
use clap::Args;
use geomx::margins::{log_returns, MarginalPipeline};
use geomx::{Error, Result};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct StandardizeArgs {
    /// Price CSV (date, price); pass twice for a pair
    #[arg(long, num_args = 1, action = clap::ArgAction::Append)]
    pub prices: Vec<PathBuf>,
    /// Tail fraction for the GPD margin
    #[arg(long, default_value_t = 0.03)]
    pub alpha: f64,
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &StandardizeArgs, cfg: &RunConfig) -> Result<()> {
    if args.prices.is_empty() || args.prices.len() > 2 {
        return Err(Error::config(
            "standardize takes one or two --prices files",
        ));
    }
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::data(format!("cannot create {}: {e}", args.out_dir.display())))?;

    // read and difference every asset
    let mut names = Vec::new();
    let mut dates = Vec::new();
    let mut returns = Vec::new();
    for path in &args.prices {
        let (d, p) = read_price_series(path)?;
        let q = log_returns(&p)?;
        names.push(
            path.file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "asset".to_string()),
        );
        dates.push(d[1..].to_vec()); // returns start at the second date
        returns.push(q);
    }
    if returns.len() == 2 {
        if returns[0].len() != returns[1].len() || dates[0] != dates[1] {
            return Err(Error::data(
                "price files must cover identical dates to form a pair",
            ));
        }
    }
    // drop any index where either asset has a zero return
    let n = returns[0].len();
    let keep: Vec<usize> = (0..n)
        .filter(|&i| returns.iter().all(|q| q[i] != 0.0))
        .collect();
    let dropped = n - keep.len();
    if dropped > 0 {
        eprintln!("dropped {dropped} zero-return indices");
    }
    let returns: Vec<Vec<f64>> = returns
        .iter()
        .map(|q| keep.iter().map(|&i| q[i]).collect())
        .collect();
    let kept_dates: Vec<String> = keep.iter().map(|&i| dates[0][i].clone()).collect();

    let provenance = format!(
        "geomx standardize config_hash={} alpha={}",
        cfg.hash(),
        args.alpha
    );
    let mut laplace_cols = Vec::new();
    for (asset, q) in names.iter().zip(&returns) {
        let pipe = MarginalPipeline::fit(q, args.alpha)?;
        let (eps, lap) = pipe.standardize(q)?;
        let csv_path = args.out_dir.join(format!("{asset}_standardized.csv"));
        let mut w = CsvWriter::create(&csv_path, &provenance, "date,q,eps,sigma,laplace")?;
        for i in 0..q.len() {
            w.row(&[
                kept_dates[i].clone(),
                fmt(q[i]),
                fmt(eps[i]),
                fmt(pipe.garch.sigma2_path[i].sqrt()),
                fmt(lap[i]),
            ])?;
        }
        w.finish()?;
        let model_path = args.out_dir.join(format!("{asset}_margins.gxm"));
        save_margins(&model_path, &cfg.hash(), &pipe)?;
        eprintln!(
            "{asset}: garch (mu={:.3e}, c={:.3e}, a={:.4}, b={:.4}), \
             gpd upper (sigma={:.4}, xi={:.4}), lower (sigma={:.4}, xi={:.4})",
            pipe.garch.mu,
            pipe.garch.c,
            pipe.garch.a,
            pipe.garch.b,
            pipe.margin.gpd_upper.0,
            pipe.margin.gpd_upper.1,
            pipe.margin.gpd_lower.0,
            pipe.margin.gpd_lower.1
        );
        laplace_cols.push(lap);
    }

    if laplace_cols.len() == 2 {
        let pair_path = args.out_dir.join("pair_laplace.csv");
        let mut w = CsvWriter::create(&pair_path, &provenance, "t,x1,x2")?;
        for i in 0..laplace_cols[0].len() {
            w.row(&[
                fmt((i + 1) as f64),
                fmt(laplace_cols[0][i]),
                fmt(laplace_cols[1][i]),
            ])?;
        }
        w.finish()?;
        eprintln!("wrote pair series to {}", pair_path.display());
    }
    Ok(())
}
