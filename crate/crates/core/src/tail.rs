//! Generative joint-tail machinery: the kernel-weighted conditional angular
//! density of exceedances, two-step tail simulation (angle draw, then
//! truncated-gamma radius inversion), and VaR/CoVaR risk measures.

use crate::error::{Error, Result};
use crate::gauge_fit::{trunc_gamma_conditional_quantile, GaugeGamFit};
use crate::geometry::{unit_point, NormKind};
use crate::margins::MarginalPipeline;
use crate::numerics::special::{ln_bessel_i0, vm_kappa_for_circular_std};
use crate::numerics::{laplace_quantile, RngStream};
use crate::quantile_fit::{Exceedance, QuantileGamFit};
use crate::splines::TWO_PI;

/// Default angular grid resolution for density normalization and sampling.
pub const DEFAULT_ANGLE_GRID: usize = 720;

/// Kernel-weighted angular density of exceedances, conditional on time:
/// a von Mises kernel over angles and a Gaussian kernel over time indices.
#[derive(Debug, Clone)]
pub struct AngularDensity {
    pub angles: Vec<f64>,
    pub times: Vec<f64>,
    /// Von Mises concentration for the angle kernel.
    pub h1: f64,
    /// Gaussian bandwidth in time units.
    pub h2: f64,
}

/// Default angle kernel: concentration equivalent to a circular standard
/// deviation of 0.25 radians.
pub fn default_angle_bandwidth() -> f64 {
    vm_kappa_for_circular_std(0.25).expect("positive spread")
}

/// Default time kernel bandwidth: a twentieth of the horizon.
pub fn default_time_bandwidth(t_len: usize) -> f64 {
    t_len as f64 / 20.0
}

pub fn fit_angular_density(exc: &[Exceedance], h1: f64, h2: f64) -> Result<AngularDensity> {
    if !(h1 > 0.0) || !(h2 > 0.0) {
        return Err(Error::config(format!(
            "kernel bandwidths must be positive, got h1={h1}, h2={h2}"
        )));
    }
    if exc.is_empty() {
        return Err(Error::data("no exceedances for the angular density"));
    }
    Ok(AngularDensity {
        angles: exc.iter().map(|e| e.point.phi).collect(),
        times: exc.iter().map(|e| e.point.t).collect(),
        h1,
        h2,
    })
}

impl AngularDensity {
    /// The density at one time index, normalized on an angle grid; build
    /// once per t and reuse for evaluation and sampling.
    pub fn conditional(&self, t: f64, n_grid: usize) -> AngularSlice {
        let ln_i0 = ln_bessel_i0(self.h1);
        // time weights, normalized for numerical headroom
        let mut weights: Vec<f64> = self
            .times
            .iter()
            .map(|tj| {
                let z = (tj - t) / self.h2;
                (-0.5 * z * z).exp()
            })
            .collect();
        let wsum: f64 = weights.iter().sum();
        if wsum <= 0.0 {
            // all exceedances are far from t; fall back on equal weights
            let equal = 1.0 / weights.len() as f64;
            weights.fill(equal);
        } else {
            for w in weights.iter_mut() {
                *w /= wsum;
            }
        }
        let raw = |phi: f64| -> f64 {
            let mut acc = 0.0;
            for (pj, w) in self.angles.iter().zip(&weights) {
                if *w == 0.0 {
                    continue;
                }
                acc += w * (self.h1 * (phi - pj).cos() - ln_i0).exp();
            }
            acc / TWO_PI
        };
        let dphi = TWO_PI / n_grid as f64;
        let grid: Vec<f64> = (0..n_grid).map(|k| k as f64 * dphi).collect();
        let values: Vec<f64> = grid.iter().map(|p| raw(*p)).collect();
        let total: f64 = values.iter().sum::<f64>() * dphi;
        let density: Vec<f64> = values.iter().map(|v| v / total).collect();
        let mut cdf = Vec::with_capacity(n_grid + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for v in &density {
            acc += v * dphi;
            cdf.push(acc);
        }
        // force the final mass to exactly 1 against accumulation error
        let last = *cdf.last().unwrap();
        for c in cdf.iter_mut() {
            *c /= last;
        }
        AngularSlice {
            t,
            angles: self.angles.clone(),
            weights,
            h1: self.h1,
            ln_i0,
            normalizer: total,
            grid,
            density,
            cdf,
            dphi,
        }
    }
}

/// The conditional angular density at a fixed time: kernel mixture plus a
/// grid discretization used for normalization and inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct AngularSlice {
    pub t: f64,
    angles: Vec<f64>,
    weights: Vec<f64>,
    h1: f64,
    ln_i0: f64,
    normalizer: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    cdf: Vec<f64>,
    dphi: f64,
}

impl AngularSlice {
    /// Renormalized density value at any angle (exactly periodic).
    pub fn density_at(&self, phi: f64) -> f64 {
        let mut acc = 0.0;
        for (pj, w) in self.angles.iter().zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            acc += w * (self.h1 * (phi - pj).cos() - self.ln_i0).exp();
        }
        acc / (TWO_PI * self.normalizer)
    }

    /// Inverse-CDF draw on the grid with linear interpolation in the cell.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        let k = match self
            .cdf
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let k = k.min(self.grid.len() - 1);
        let mass = self.cdf[k + 1] - self.cdf[k];
        let frac = if mass > 0.0 { (u - self.cdf[k]) / mass } else { 0.5 };
        (self.grid[k] + frac * self.dphi) % TWO_PI
    }
}

/// The full generative joint-tail object: both fitted stages, the angular
/// density of exceedances, the norm, and optionally the per-asset marginal
/// pipelines for original-scale output.
#[derive(Debug, Clone)]
pub struct TailModel {
    pub quantile: QuantileGamFit,
    pub gauge: GaugeGamFit,
    pub angular: AngularDensity,
    pub norm: NormKind,
    pub margins: Option<Box<[MarginalPipeline; 2]>>,
}

impl TailModel {
    pub fn new(
        quantile: QuantileGamFit,
        gauge: GaugeGamFit,
        angular: AngularDensity,
        norm: NormKind,
        margins: Option<Box<[MarginalPipeline; 2]>>,
    ) -> Result<Self> {
        if (quantile.tau - gauge.tau).abs() > 1e-12 {
            return Err(Error::model(
                "quantile and gauge stages disagree on the threshold level",
            ));
        }
        if quantile.norm != norm {
            return Err(Error::model("norm differs between model and quantile fit"));
        }
        if (quantile.model.t_min - gauge.model.t_min).abs() > 1e-9
            || (quantile.model.t_max - gauge.model.t_max).abs() > 1e-9
        {
            return Err(Error::model("time ranges differ between the two stages"));
        }
        Ok(TailModel {
            quantile,
            gauge,
            angular,
            norm,
            margins,
        })
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.quantile.model.t_min, self.quantile.model.t_max)
    }
}

/// Simulate n points from the conditional law of the process given a radial
/// exceedance at time t, on the Laplace scale.
pub fn simulate_tail(
    model: &TailModel,
    t: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<(f64, f64)>> {
    let slice = model.angular.conditional(t, DEFAULT_ANGLE_GRID);
    simulate_tail_with_slice(model, &slice, t, n, rng)
}

/// Same as `simulate_tail` with a prebuilt angular slice, for callers that
/// simulate repeatedly at the same time index.
pub fn simulate_tail_with_slice(
    model: &TailModel,
    slice: &AngularSlice,
    t: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<(f64, f64)>> {
    let qe = model.quantile.model.evaluator()?;
    let ge = model.gauge.model.evaluator()?;
    let shape = model.gauge.shape;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let phi = slice.sample(rng);
        let thresh = qe.predict(phi, t)?.exp();
        let rate = ge.predict(phi, t)?.exp();
        let u = rng.uniform();
        let r = trunc_gamma_conditional_quantile(u, rate, thresh, shape)?;
        let v = unit_point(phi, model.norm);
        out.push((r * v.0, r * v.1));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarSide {
    Downside,
    Upside,
}

#[derive(Debug, Clone)]
pub struct CovarEstimate {
    /// Marginal value-at-risk on the Laplace scale.
    pub var: f64,
    /// Conditional value-at-risk on the Laplace scale.
    pub covar: f64,
    /// Original-scale counterparts when marginal pipelines are attached.
    pub var_original: Option<f64>,
    pub covar_original: Option<f64>,
    pub n_conditioning: usize,
}

/// VaR and CoVaR at level p from model simulation. Downside: the p-quantile
/// of the second component among tail draws whose first component lies at
/// or below the marginal p-quantile. Upside mirrors with 1 - p and >=.
///
/// Valid because the conditioning event lies inside the simulated region:
/// |VaR| must exceed the largest fitted threshold radius at t, which is
/// checked and rejected otherwise.
pub fn estimate_covar(
    model: &TailModel,
    t: f64,
    p: f64,
    side: CovarSide,
    n_sim: usize,
    rng: &mut RngStream,
) -> Result<CovarEstimate> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::domain(format!(
            "risk level must lie in (0, 0.5), got {p}"
        )));
    }
    let var_magnitude = -laplace_quantile(p)?; // positive
    // the conditioning half-plane must sit beyond the modeled threshold
    let qe = model.quantile.model.evaluator()?;
    let mut max_thresh: f64 = 0.0;
    for k in 0..DEFAULT_ANGLE_GRID {
        let phi = TWO_PI * k as f64 / DEFAULT_ANGLE_GRID as f64;
        max_thresh = max_thresh.max(qe.predict(phi, t)?.exp());
    }
    if var_magnitude <= max_thresh {
        return Err(Error::domain(format!(
            "conditioning level p={p} lies inside the modeled region: |VaR| = {var_magnitude:.4} \
             <= max threshold radius {max_thresh:.4}; use a smaller p"
        )));
    }

    let sims = simulate_tail(model, t, n_sim, rng)?;
    let (var, mut conditioned): (f64, Vec<f64>) = match side {
        CovarSide::Downside => {
            let var = -var_magnitude;
            (
                var,
                sims.iter()
                    .filter(|(x1, _)| *x1 <= var)
                    .map(|(_, x2)| *x2)
                    .collect(),
            )
        }
        CovarSide::Upside => {
            let var = var_magnitude;
            (
                var,
                sims.iter()
                    .filter(|(x1, _)| *x1 >= var)
                    .map(|(_, x2)| *x2)
                    .collect(),
            )
        }
    };
    if conditioned.len() < 500 {
        return Err(Error::data(format!(
            "only {} simulated points satisfy the conditioning event; increase n_sim",
            conditioned.len()
        )));
    }
    conditioned.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n_c = conditioned.len();
    let k = ((p * n_c as f64).ceil() as usize).clamp(1, n_c);
    let covar = match side {
        CovarSide::Downside => conditioned[k - 1],
        CovarSide::Upside => conditioned[n_c - k],
    };

    let (var_original, covar_original) = match &model.margins {
        Some(pipes) => {
            let idx = (t.round() as usize).saturating_sub(1);
            (
                Some(pipes[0].return_from_laplace(var, idx)?),
                Some(pipes[1].return_from_laplace(covar, idx)?),
            )
        }
        None => (None, None),
    };
    Ok(CovarEstimate {
        var,
        covar,
        var_original,
        covar_original,
        n_conditioning: n_c,
    })
}
