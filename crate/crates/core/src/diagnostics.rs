//! Model checking: the exponential QQ diagnostic with order-statistic
//! confidence bands, and the time-averaged return-level-set probability
//! diagnostic.

use crate::error::{Error, Result};
use crate::gauge_fit::{trunc_gamma_pit, GaugeGamFit};
use crate::numerics::special::beta_quantile;
use crate::quantile_fit::{Exceedance, QuantileGamFit};
use crate::types::BivariateSeries;
use rayon::prelude::*;

/// Sorted exponential-scale residuals with their theoretical quantiles and
/// pointwise 95% order-statistic bands.
#[derive(Debug, Clone)]
pub struct QQDiagnostic {
    pub sorted_pit: Vec<f64>,
    pub theoretical: Vec<f64>,
    pub lower_band: Vec<f64>,
    pub upper_band: Vec<f64>,
}

impl QQDiagnostic {
    /// Fraction of order statistics inside their bands.
    pub fn fraction_inside(&self) -> f64 {
        let inside = self
            .sorted_pit
            .iter()
            .zip(self.lower_band.iter().zip(&self.upper_band))
            .filter(|(p, (lo, hi))| **p >= **lo && **p <= **hi)
            .count();
        inside as f64 / self.sorted_pit.len().max(1) as f64
    }
}

/// Exponential QQ diagnostic: every exceedance is transformed to the
/// standard exponential scale through the fitted truncated-gamma model; the
/// k-th order statistic of a uniform sample is Beta(k, n+1-k), which gives
/// pointwise bands on the exponential scale. Bands assume the transformed
/// sample is IID.
pub fn qq_exponential(gauge: &GaugeGamFit, exceedances: &[Exceedance]) -> Result<QQDiagnostic> {
    if exceedances.is_empty() {
        return Err(Error::data("no exceedances to diagnose"));
    }
    let ge = gauge.model.evaluator()?;
    let mut pit = Vec::with_capacity(exceedances.len());
    for e in exceedances {
        let rate = ge.predict(e.point.phi, e.point.t)?.exp();
        pit.push(trunc_gamma_pit(e.point.r, rate, e.threshold, gauge.shape)?);
    }
    pit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = pit.len();
    let np1 = (n + 1) as f64;
    let mut theoretical = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for k in 1..=n {
        theoretical.push(-(1.0 - k as f64 / np1).ln());
        let a = k as f64;
        let b = np1 - k as f64;
        let q_lo = beta_quantile(0.025, a, b)?;
        let q_hi = beta_quantile(0.975, a, b)?;
        lower.push(-(1.0 - q_lo).ln());
        upper.push(-(1.0 - q_hi).ln());
    }
    Ok(QQDiagnostic {
        sorted_pit: pit,
        theoretical,
        lower_band: lower,
        upper_band: upper,
    })
}

/// Default probability grid: 200 equally spaced levels from 0.8 to 0.99.
pub fn default_p_grid() -> Vec<f64> {
    (0..200).map(|k| 0.8 + 0.19 * k as f64 / 199.0).collect()
}

/// Time-averaged return-level-set probabilities: for each level p, the
/// fraction of observations inside the fitted level set, reported as pairs
/// (-log(1-p), -log(1-p_hat)). Counts are exact: a point is inside when its
/// radius is at most the fitted radial level at its own angle and time.
pub fn rl_probability_diagnostic(
    quantile: &QuantileGamFit,
    gauge: &GaugeGamFit,
    series: &BivariateSeries,
    p_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let tau = quantile.tau;
    for &p in p_grid {
        if !(p >= tau && p < 1.0) {
            return Err(Error::domain(format!(
                "probability {p} outside the modeled range [{tau}, 1)"
            )));
        }
    }
    if series.is_empty() {
        return Err(Error::data("empty series in the return-level diagnostic"));
    }
    // per-observation polar data, thresholds, and rates (computed once)
    let polar = crate::quantile_fit::polar_series(series, quantile.norm)?;
    let qe = quantile.model.evaluator()?;
    let ge = gauge.model.evaluator()?;
    let mut thresh = Vec::with_capacity(polar.len());
    let mut rate = Vec::with_capacity(polar.len());
    for p in &polar {
        thresh.push(qe.predict(p.phi, p.t)?.exp());
        rate.push(ge.predict(p.phi, p.t)?.exp());
    }
    let shape = gauge.shape;
    let t_len = series.len() as f64;
    let pairs: Result<Vec<(f64, f64)>> = p_grid
        .par_iter()
        .map(|&p| {
            let mut inside = 0usize;
            for (i, pt) in polar.iter().enumerate() {
                let level = if p == tau {
                    thresh[i]
                } else {
                    let q_c = (p - tau) / (1.0 - tau);
                    crate::gauge_fit::trunc_gamma_conditional_quantile(
                        q_c, rate[i], thresh[i], shape,
                    )?
                };
                if pt.r <= level {
                    inside += 1;
                }
            }
            let p_hat = inside as f64 / t_len;
            Ok((-(1.0 - p).ln(), -(1.0 - p_hat).max(1.0 / t_len).ln()))
        })
        .collect();
    pairs
}
